#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>
#include <thread>

#include "mlmbias/adapter.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

namespace {

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

bool write_all(int fd, const char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

ProcessTransport::ProcessTransport(const std::string& command) {
  // A dead adapter must surface as a read error, not kill the engine.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessTransport::~ProcessTransport() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
}

bool ProcessTransport::read_line(std::string& line) {
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      line.assign(pending_, 0, nl);
      pending_.erase(0, nl + 1);
      return true;
    }
    char buf[1 << 16];
    const ssize_t n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<std::string> ProcessTransport::exchange(const std::vector<std::string>& request_lines) {
  if (to_child_ < 0) throw Error("adapter process is not running");
  bool write_ok = true;
  std::thread writer([&] {
    std::string chunk;
    for (const auto& line : request_lines) {
      chunk += line;
      chunk += '\n';
      if (chunk.size() >= (1 << 16)) {
        if (!write_all(to_child_, chunk.data(), chunk.size())) {
          write_ok = false;
          return;
        }
        chunk.clear();
      }
    }
    if (!chunk.empty()) write_ok = write_all(to_child_, chunk.data(), chunk.size());
  });

  std::vector<std::string> responses;
  responses.reserve(request_lines.size());
  std::string line;
  bool eof = false;
  while (responses.size() < request_lines.size()) {
    if (!read_line(line)) {
      eof = true;
      break;
    }
    if (line.empty()) continue;
    responses.push_back(line);
  }
  writer.join();
  if (eof) {
    throw Error("adapter closed its output after " + std::to_string(responses.size()) + " of " +
                std::to_string(request_lines.size()) + " responses");
  }
  if (!write_ok) throw Error("failed writing to adapter process");
  return responses;
}

}  // namespace mlmbias
