#include "mlcwmd/kern/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace mlcwmd::kern {

namespace {

const Ops* pick_auto() {
  if (const char* env = std::getenv("MLCWMD_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_ops();
    if (want == "avx2") {
      if (const Ops* t = avx2_ops()) return t;
      throw std::runtime_error("MLCWMD_KERNELS=avx2 but AVX2 is unavailable");
    }
  }
  if (const Ops* t = avx2_ops()) return t;
  return &scalar_ops();
}

const Ops*& active_slot() {
  static const Ops* active = pick_auto();
  return active;
}

}  // namespace

const Ops& ops() { return *active_slot(); }

void force_lane(const std::string& name) {
  if (name.empty()) {
    active_slot() = pick_auto();
    return;
  }
  if (name == "scalar") {
    active_slot() = &scalar_ops();
    return;
  }
  if (name == "avx2") {
    if (const Ops* t = avx2_ops()) {
      active_slot() = t;
      return;
    }
    throw std::runtime_error("AVX2 kernel lane unavailable on this CPU");
  }
  throw std::runtime_error("unknown kernel lane: " + name);
}

}  // namespace mlcwmd::kern
