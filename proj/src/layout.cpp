#include "nafd/layout.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nafd/csv.hpp"

namespace nafd {

std::string_view mode_name(DuplexMode m) {
  return m == DuplexMode::NAFD ? "nafd" : "ccfd";
}

DuplexMode parse_mode(std::string_view s) {
  if (s == "nafd" || s == "NAFD") return DuplexMode::NAFD;
  if (s == "ccfd" || s == "CCFD") return DuplexMode::CCFD;
  throw std::invalid_argument("unknown duplex mode '" + std::string(s) + "'");
}

Point2 sample_disc(double radius, Rng& rng) {
  const double r = radius * std::sqrt(uniform01(rng));
  const double phi = 2.0 * std::numbers::pi * uniform01(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

Layout generate_layout(const SystemConfig& cfg, DuplexMode mode, Rng& rng,
                       int max_retries) {
  if (mode == DuplexMode::CCFD && cfg.n_trau != cfg.n_rrau)
    throw ConfigError("CCFD layout requires n_trau == n_rrau");

  Layout out;
  out.mode = mode;
  for (int m = 0; m < cfg.n_trau; ++m)
    out.trau_xy.push_back(sample_disc(cfg.radius_m, rng));
  if (mode == DuplexMode::CCFD) {
    out.rrau_xy = out.trau_xy;
  } else {
    for (int z = 0; z < cfg.n_rrau; ++z)
      out.rrau_xy.push_back(sample_disc(cfg.radius_m, rng));
  }

  auto clear_of_raus = [&](const Point2& p) {
    for (const auto& q : out.trau_xy)
      if (distance(p, q) < cfg.protection_m) return false;
    for (const auto& q : out.rrau_xy)
      if (distance(p, q) < cfg.protection_m) return false;
    return true;
  };
  auto place_user = [&]() {
    for (int attempt = 0; attempt < max_retries; ++attempt) {
      const Point2 p = sample_disc(cfg.radius_m, rng);
      if (clear_of_raus(p)) return p;
    }
    throw GeometryError("cannot place user outside the RAU protection radius after " +
                        std::to_string(max_retries) + " draws");
  };
  for (int k = 0; k < cfg.n_dl_users; ++k) out.dl_user_xy.push_back(place_user());
  for (int j = 0; j < cfg.n_ul_users; ++j) out.ul_user_xy.push_back(place_user());
  return out;
}

void write_layout_csv(std::ostream& os, const Layout& layout) {
  CsvWriter w(os);
  w.row("kind", "index", "x_m", "y_m");
  auto emit = [&](const char* kind, const std::vector<Point2>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) w.row(kind, i, pts[i].x, pts[i].y);
  };
  emit("trau", layout.trau_xy);
  emit("rrau", layout.rrau_xy);
  emit("dl_user", layout.dl_user_xy);
  emit("ul_user", layout.ul_user_xy);
}

}  // namespace nafd
