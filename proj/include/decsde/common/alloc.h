#pragma once

namespace decsde {

// Training allocates and frees the same large activation buffers every step.
// With glibc's defaults each of them is a fresh mmap, and the page faults cost
// more than the arithmetic; this keeps freed memory in the heap instead.
// No-op on other C libraries.
void retain_freed_memory();

}  // namespace decsde
