#pragma once

#include <stdexcept>
#include <vector>

#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/types.hpp"

namespace nafd {

/// Raised when a trial's realization cannot support the ZF designs; the
/// harness redraws the trial.
class DegenerateChannelError : public std::runtime_error {
 public:
  DegenerateChannelError(const std::string& what, std::vector<int> users)
      : std::runtime_error(what), users_(std::move(users)) {}
  const std::vector<int>& users() const { return users_; }

 private:
  std::vector<int> users_;
};

struct BeamformerSet {
  std::vector<CMat> w_analog;  // [m] M x N_RF, entries of modulus 1/sqrt(M)
  std::vector<CMat> u_analog;  // [z] M x N_RF
  std::vector<CMat> f_digital; // [m] N_RF x K, row block m of pinv(H)
  std::vector<CVec> v_rx;      // [j] N_RF, receive vector at R-RAU assoc[j]
  std::vector<CVec> h_eff;     // [k] N_T*N_RF, stacked W_m^H h_{k,m}
  Grid<CVec> g_eff;            // [j][z] U_z^H g_{j,z}
  Grid<CMat> g_resid;          // [m][z] W_m^H Htilde_{m,z}^H U_z
  std::vector<int> assoc;      // [j] serving R-RAU

  int n_rf() const { return w_analog.empty() ? 0 : static_cast<int>(w_analog[0].cols()); }
};

struct AnalogDesign {
  std::vector<CMat> w;
  std::vector<CMat> u;
};

/// Projection of an arbitrary matrix onto {entries (1/sqrt(M)) e^{j phi}}.
CMat project_constant_modulus(const CMat& a);

/// Alternating projection between the constant-modulus set and
/// {T Q : Q unitary}, where T has orthonormal columns. Starts from the
/// elementwise phase of T. Optionally records ||W_i - T Q_i||_F per iteration
/// and every intermediate W_i.
CMat alternating_projection(const CMat& target, int iterations,
                            std::vector<double>* distance_trace = nullptr,
                            std::vector<CMat>* iterates = nullptr);

/// N_RF dominant left singular vectors of the M x n column stack.
CMat dominant_subspace(const std::vector<CVec>& columns, int m_antennas, int n_rf);

inline constexpr int kAnalogIterations = 50;

AnalogDesign design_analog(const ChannelSet& ch, const SystemConfig& cfg);

struct DigitalDesign {
  std::vector<CMat> f;     // [m] N_RF x K
  std::vector<CVec> h_eff; // [k]
  CMat h_stacked;          // K x N_T*N_RF, rows h_k^H
  CMat f_stacked;          // N_T*N_RF x K
};

/// F = pinv(H). Throws DegenerateChannelError if the smallest singular value
/// of H is below 1e-10 times the largest.
DigitalDesign design_digital_zf(const ChannelSet& ch, const std::vector<CMat>& w);

struct UplinkReceive {
  std::vector<int> assoc;
  std::vector<CVec> v_rx;
  Grid<CVec> g_eff;
};

/// Strongest-large-scale association (ties to the lowest index) and the
/// normalized receive vector v = gbar / ||gbar||^2.
UplinkReceive associate_and_receive(const ChannelSet& ch, const std::vector<CMat>& u);

BeamformerSet build_beamformers(const ChannelSet& ch, const SystemConfig& cfg);

}  // namespace nafd
