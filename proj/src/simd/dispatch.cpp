#include <atomic>
#include <cstdlib>
#include <string>

#include "frontlab/simd/kernels.hpp"

namespace frontlab::simd {
namespace {

const KernelTable* pick_default() {
  if (const char* env = std::getenv("FRONTLAB_SIMD")) {
    if (std::string(env) == "scalar") return &scalar_kernels();
  }
  if (cpu_has_avx2()) {
    if (const KernelTable* t = avx2_kernels()) return t;
  }
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
  const KernelTable* t = &scalar_kernels();
  if (isa == Isa::avx2) {
    t = avx2_kernels();
    if (t == nullptr || !cpu_has_avx2()) t = &scalar_kernels();
  }
  slot().store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace frontlab::simd
