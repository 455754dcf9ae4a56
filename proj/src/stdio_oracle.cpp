#include "focus/stdio_oracle.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "focus/log.hpp"

namespace focus {

struct StdioOracle::Impl {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  int err_fd = -1;
  std::string read_buffer;
  std::thread err_reader;
  mutable std::mutex err_mutex;
  std::string err_text;

  std::string stderr_copy() const {
    std::lock_guard lock(err_mutex);
    return err_text;
  }
};

namespace {

[[noreturn]] void fail(const StdioOracle::Impl& impl, const std::string& what) {
  std::string msg = "stdio oracle: " + what;
  const std::string err = impl.stderr_copy();
  if (!err.empty()) msg += "\n--- oracle stderr ---\n" + err;
  throw OracleError(msg);
}

}  // namespace

StdioOracle::StdioOracle(const std::string& command, std::string image_ref)
    : impl_(std::make_unique<Impl>()), image_ref_(std::move(image_ref)) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0)
    throw OracleError(std::string("stdio oracle: pipe failed: ") + std::strerror(errno));
  const pid_t pid = fork();
  if (pid < 0) throw OracleError(std::string("stdio oracle: fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  impl_->pid = pid;
  impl_->to_child = in_pipe[1];
  impl_->from_child = out_pipe[0];
  impl_->err_fd = err_pipe[0];
  Impl* impl = impl_.get();
  impl_->err_reader = std::thread([impl] {
    char buf[4096];
    for (;;) {
      const ssize_t n = read(impl->err_fd, buf, sizeof buf);
      if (n <= 0) break;
      std::lock_guard lock(impl->err_mutex);
      impl->err_text.append(buf, static_cast<std::size_t>(n));
    }
  });
  log::debug("stdio oracle started: " + command);
}

StdioOracle::~StdioOracle() {
  if (impl_->to_child >= 0) close(impl_->to_child);
  if (impl_->pid > 0) {
    int status = 0;
    waitpid(impl_->pid, &status, 0);
  }
  if (impl_->err_reader.joinable()) impl_->err_reader.join();
  if (impl_->from_child >= 0) close(impl_->from_child);
  if (impl_->err_fd >= 0) close(impl_->err_fd);
}

std::string StdioOracle::stderr_text() const { return impl_->stderr_copy(); }

Logits StdioOracle::query(const PixelRect& rect, const std::string& target_text) {
  const nlohmann::json req = {{"rect", {rect.x0, rect.y0, rect.x1, rect.y1}},
                              {"target", target_text},
                              {"image_ref", image_ref_}};
  const std::string line = req.dump() + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = write(impl_->to_child, line.data() + sent, line.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(*impl_, std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }

  std::string& buf = impl_->read_buffer;
  std::size_t nl;
  while ((nl = buf.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = read(impl_->from_child, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (impl_->err_reader.joinable()) {
        int status = 0;
        waitpid(impl_->pid, &status, 0);
        impl_->pid = -1;
        impl_->err_reader.join();
        if (WIFEXITED(status))
          fail(*impl_, "process exited with status " + std::to_string(WEXITSTATUS(status)) +
                           " before answering");
      }
      fail(*impl_, "process closed its output before answering");
    }
    buf.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string reply = buf.substr(0, nl);
  buf.erase(0, nl + 1);

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply);
  } catch (const std::exception& e) {
    fail(*impl_, "malformed response '" + reply + "': " + e.what());
  }
  if (!j.is_object()) fail(*impl_, "response is not an object: " + reply);
  if (j.contains("error")) fail(*impl_, "oracle reported error: " + j["error"].dump());
  if (!j.contains("l_yes") || !j.contains("l_no") || !j["l_yes"].is_number() || !j["l_no"].is_number())
    fail(*impl_, "response lacks numeric l_yes/l_no: " + reply);
  return {j["l_yes"].get<double>(), j["l_no"].get<double>()};
}

}  // namespace focus
