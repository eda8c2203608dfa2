#pragma once

#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "nafd/config.hpp"
#include "nafd/rng.hpp"
#include "nafd/types.hpp"

namespace nafd {

enum class DuplexMode { NAFD, CCFD };

std::string_view mode_name(DuplexMode m);
DuplexMode parse_mode(std::string_view s);

struct Layout {
  std::vector<Point2> trau_xy;
  std::vector<Point2> rrau_xy;
  std::vector<Point2> dl_user_xy;
  std::vector<Point2> ul_user_xy;
  DuplexMode mode = DuplexMode::NAFD;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform point on the disc of radius R (radius = R * sqrt(u)).
Point2 sample_disc(double radius, Rng& rng);

/// RAUs are placed first; each user is resampled until it is at least
/// protection_m from every RAU. In CCFD mode R-RAU i sits on T-RAU i.
Layout generate_layout(const SystemConfig& cfg, DuplexMode mode, Rng& rng,
                       int max_retries = 10000);

/// kind,index,x_m,y_m
void write_layout_csv(std::ostream& os, const Layout& layout);

}  // namespace nafd
