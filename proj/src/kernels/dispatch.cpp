#include <atomic>
#include <cstdlib>
#include <string>

#include "nafd/kernels/kernels.hpp"

namespace nafd::kernels {
namespace {

Backend detect() {
  if (const char* env = std::getenv("NAFD_KERNELS")) {
    if (std::string(env) == "scalar") return Backend::Scalar;
  }
  return (avx2_table() != nullptr && cpu_has_avx2()) ? Backend::Avx2
                                                     : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool set_backend(Backend b) {
  if (b == Backend::Avx2 && (avx2_table() == nullptr || !cpu_has_avx2()))
    return false;
  current().store(b, std::memory_order_relaxed);
  return true;
}

std::string_view backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& active() {
  if (active_backend() == Backend::Avx2) return *avx2_table();
  return scalar_table();
}

}  // namespace nafd::kernels
