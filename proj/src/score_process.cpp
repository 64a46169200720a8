#include "hrecon/score_process.hpp"

#include "hrecon/error.hpp"
#include "hrecon/score_protocol.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstring>
#include <sstream>

extern char **environ;

namespace hrecon {

ProcessScore::ProcessScore(std::vector<std::string> argv)
  : argv_{std::move(argv)}
{
  if (argv_.empty() || argv_.front().empty()) { throw ConfigError("score process command is empty"); }
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) { throw ConfigError(fmt::format("pipe failed: {}", std::strerror(errno))); }
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ConfigError(fmt::format("pipe failed: {}", std::strerror(errno)));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) { posix_spawn_file_actions_addclose(&actions, fd); }

  std::vector<char *> cargv;
  for (auto &a : argv_) { cargv.push_back(a.data()); }
  cargv.push_back(nullptr);

  int const rc = posix_spawnp(&pid_, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw ConfigError(fmt::format("cannot start score process {}: {}", argv_.front(), std::strerror(rc)));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessScore::~ProcessScore()
{
  if (to_child_ >= 0) { ::close(to_child_); }
  if (from_child_ >= 0) { ::close(from_child_); }
  if (pid_ > 0) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
}

Tensor3 ProcessScore::score(Tensor3 const &x, double sigma)
{
  std::lock_guard lock(mutex_);
  protocol::write_all(to_child_, protocol::encode_request(x, sigma));

  std::vector<std::uint8_t> body;
  bool got = false;
  try {
    got = protocol::read_frame(from_child_, body);
  } catch (FormatError const &e) {
    throw NumericalError(fmt::format("score process {}: {}", argv_.front(), e.what()));
  }
  if (!got) { throw NumericalError(fmt::format("score process {} closed its output", argv_.front())); }
  protocol::Message msg;
  try {
    msg = protocol::decode_body(body);
  } catch (FormatError const &e) {
    throw NumericalError(fmt::format("score process sent a malformed frame: {}", e.what()));
  }
  if (auto *err = std::get_if<protocol::ErrorFrame>(&msg)) {
    throw NumericalError(fmt::format("score process reported: {}", err->message));
  }
  auto *resp = std::get_if<protocol::Response>(&msg);
  if (resp == nullptr) { throw NumericalError("score process answered with a request frame"); }
  if (resp->tensor.shape() != x.shape()) {
    throw NumericalError(fmt::format(
      "score process answered {}x{}x{} for a {}x{}x{} request",
      resp->tensor.dim(0), resp->tensor.dim(1), resp->tensor.dim(2), x.dim(0), x.dim(1), x.dim(2)));
  }
  return std::move(resp->tensor);
}

std::string ProcessScore::describe() const { return fmt::format("exec({})", fmt::join(argv_, " ")); }

std::vector<std::string> ProcessScore::parse_command(std::string const &command)
{
  std::istringstream in(command);
  std::vector<std::string> out;
  for (std::string word; in >> word;) { out.push_back(word); }
  return out;
}

} // namespace hrecon
