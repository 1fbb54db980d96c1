#pragma once

#include <stdexcept>
#include <string>

namespace pairsynth {

// Process exit codes used by the CLI. Library errors map onto these so that
// scripted callers can distinguish failure classes.
enum class ExitCode : int {
  ok = 0,
  failure = 1,        // catch-all (training aborts, I/O, ...)
  usage = 2,          // bad flags / arguments
  config = 3,         // malformed or invalid configuration
  checkpoint = 4,     // missing or unreadable checkpoint
  dataset = 5,        // dataset missing, corrupt, or version mismatch
  run_dir = 6,        // run directory conflict (lock held, non-empty without --force)
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ExitCode::failure, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

struct CheckpointError : Error {
  explicit CheckpointError(const std::string& what) : Error(ExitCode::checkpoint, what) {}
};

struct DatasetError : Error {
  explicit DatasetError(const std::string& what) : Error(ExitCode::dataset, what) {}
};

struct RunDirError : Error {
  explicit RunDirError(const std::string& what) : Error(ExitCode::run_dir, what) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& what) : Error(ExitCode::failure, what) {}
};

}  // namespace pairsynth
