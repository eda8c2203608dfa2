#pragma once

#include <array>
#include <stdexcept>

namespace nafd {

/// Normalized MSE of the MSE-optimal B-bit uniform (mid-rise, 2^B level)
/// scalar quantizer on a unit-variance Gaussian, B = 1..16. Regenerate with
/// tools/gen_rho_table.py; tests re-derive every entry independently.
inline constexpr std::array<double, 16> kRhoTable = {
    3.6338022763241866e-1,
    1.188460503840772e-1,
    3.7439659391523532e-2,
    1.1542884431350899e-2,
    3.4952113615055684e-3,
    1.040045408791933e-3,
    3.043327708240368e-4,
    8.7686185784093762e-5,
    2.4919029646278532e-5,
    6.9970051971349385e-6,
    1.9444131289512747e-6,
    5.3553653684400451e-7,
    1.463693282332573e-7,
    3.9739396592183735e-8,
    1.0726983586900414e-8,
    2.8809223811906837e-9};

inline double rho_for_bits(int bits) {
  if (bits < 1 || bits > 16)
    throw std::out_of_range("DAC resolution must be in [1, 16] bits");
  return kRhoTable[static_cast<std::size_t>(bits - 1)];
}

struct QuantModel {
  int bits = 1;
  double rho = kRhoTable[0];

  static QuantModel for_bits(int b) { return {b, rho_for_bits(b)}; }
  /// Arbitrary distortion factor, e.g. rho = 0 for an ideal DAC.
  static QuantModel with_rho(double r) { return {0, r}; }
};

}  // namespace nafd
