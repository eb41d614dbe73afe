#include "decsde/common/alloc.h"

#if defined(__GLIBC__)
#include <climits>
#include <malloc.h>
#endif

namespace decsde {

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, INT_MAX);
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace decsde
