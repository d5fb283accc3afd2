#pragma once

#include <exception>
#include <mutex>

namespace navee {

/// Environment variable that pins the OpenMP thread count for every kernel.
inline constexpr const char* kThreadsEnv = "NAVEE_THREADS";

/// Reads NAVEE_THREADS (if set to a positive integer) and applies it.
/// Returns the thread count kernels will use.
int apply_thread_env();

void set_threads(int n);
int max_threads();

/// Holds the first exception thrown inside a parallel region so it can be
/// rethrown on the calling thread after the region joins.
class ExceptionSlot {
 public:
  void capture() noexcept {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
  }
  void rethrow_if_set() {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace navee
