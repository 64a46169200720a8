#pragma once

#include "hrecon/sde.hpp"

#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

namespace hrecon {

// Score provider backed by a child process speaking the frame protocol in
// score_protocol.hpp on its stdin/stdout. Requests are serialized; one
// request is in flight at a time. Constructing one sets SIGPIPE to ignored so
// a dead child surfaces as an error instead of killing the caller.
class ProcessScore final : public ScoreProvider
{
public:
  // argv[0] is resolved through PATH.
  explicit ProcessScore(std::vector<std::string> argv);
  ~ProcessScore() override;

  ProcessScore(ProcessScore const &) = delete;
  ProcessScore &operator=(ProcessScore const &) = delete;

  Tensor3 score(Tensor3 const &x, double sigma) override;
  bool concurrent() const override { return false; }
  std::string describe() const override;

  // Splits "path arg1 arg2" on whitespace.
  static std::vector<std::string> parse_command(std::string const &command);

private:
  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::mutex mutex_;
};

} // namespace hrecon
