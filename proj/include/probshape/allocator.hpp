#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace probshape {

/// Keeps freed heap memory mapped between training steps instead of trimming
/// it back to the kernel. No-op off glibc.
inline void retain_heap_between_steps() {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  mallopt(M_TOP_PAD, 16 << 20);
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
#endif
}

}  // namespace probshape
