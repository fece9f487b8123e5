/*
 * Copyright 2026 The CDP Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "cdp/error.h"
#include "cdp/predictor.h"

namespace cdp {
namespace {

using Clock = std::chrono::steady_clock;

void IgnoreSigpipe() {
  static std::once_flag once;
  // Writes to a dead predictor must surface as EPIPE, not kill the process.
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void SetNonBlocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string DescribeStatus(int status) {
  if (WIFEXITED(status)) {
    return "exited with status " + std::to_string(WEXITSTATUS(status));
  }
  if (WIFSIGNALED(status)) {
    return "was killed by signal " + std::to_string(WTERMSIG(status));
  }
  return "terminated";
}

}  // namespace

class ExternalPredictor::Session {
 public:
  Session(const std::string& command, std::chrono::milliseconds timeout)
      : timeout_(timeout) {
    IgnoreSigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) {
      throw ProtocolError("cannot create pipe: " +
                          std::string(std::strerror(errno)));
    }
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ProtocolError("cannot create pipe: " +
                          std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ > 0) ::setpgid(pid_, pid_);
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
        ::close(fd);
      }
      throw ProtocolError("cannot spawn '" + command + "': " +
                          std::strerror(errno));
    }
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    SetNonBlocking(write_fd_);
    SetNonBlocking(read_fd_);
  }

  ~Session() { Shutdown(); }

  // Sends `request` and collects exactly `expected` reply lines.
  std::vector<std::string> Exchange(const std::string& request,
                                    std::size_t expected,
                                    const std::string& what) {
    if (failed_) throw ProtocolError("external predictor session is broken");
    if (!buffer_.empty()) {
      Fail("unexpected output before " + what + ": '" + FirstLine() + "'");
    }
    const auto deadline = Clock::now() + timeout_;
    std::size_t written = 0;
    std::vector<std::string> lines;
    while (lines.size() < expected) {
      TakeLines(lines, expected);
      if (lines.size() >= expected) break;
      pollfd fds[2];
      nfds_t count = 0;
      fds[count++] = {read_fd_, POLLIN, 0};
      if (written < request.size()) fds[count++] = {write_fd_, POLLOUT, 0};
      const auto now = Clock::now();
      if (now >= deadline) {
        Fail("timed out after " + std::to_string(timeout_.count()) +
             " ms waiting for " + what + " (expected " +
             std::to_string(expected) + " line(s), got " +
             std::to_string(lines.size()) + ")");
      }
      const auto left =
          std::chrono::ceil<std::chrono::milliseconds>(deadline - now);
      const int ready = ::poll(fds, count, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        Fail(std::string("poll failed: ") + std::strerror(errno));
      }
      if (count == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t n = ::write(write_fd_, request.data() + written,
                                  request.size() - written);
        if (n > 0) {
          written += static_cast<std::size_t>(n);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          Fail("predictor " + ReapStatus() + " before QUIT (while sending " +
               what + ")");
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char chunk[65536];
        const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
        if (n > 0) {
          buffer_.append(chunk, static_cast<std::size_t>(n));
        } else if (n == 0) {
          TakeLines(lines, expected);
          if (lines.size() >= expected) break;
          Fail("predictor " + ReapStatus() + " before QUIT (expected " +
               std::to_string(expected) + " line(s) for " + what + ", got " +
               std::to_string(lines.size()) + ")");
        } else if (errno != EAGAIN && errno != EINTR) {
          Fail(std::string("read failed: ") + std::strerror(errno));
        }
      }
    }
    if (!buffer_.empty()) {
      Fail("expected " + std::to_string(expected) + " line(s) for " + what +
           ", got more (next: '" + FirstLine() + "')");
    }
    return lines;
  }

  void Shutdown() {
    if (pid_ <= 0) return;
    if (write_fd_ >= 0) {
      if (!failed_) {
        static constexpr char kQuit[] = "QUIT\n";
        [[maybe_unused]] const ssize_t n =
            ::write(write_fd_, kQuit, sizeof(kQuit) - 1);
      }
      ::close(write_fd_);
      write_fd_ = -1;
    }
    const auto deadline =
        Clock::now() + std::min(timeout_, std::chrono::milliseconds(2000));
    int status = 0;
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() >= deadline) {
        KillGroup();
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    pid_ = -1;
    if (read_fd_ >= 0) {
      ::close(read_fd_);
      read_fd_ = -1;
    }
  }

 private:
  [[noreturn]] void Fail(const std::string& message) {
    failed_ = true;
    if (pid_ > 0) {
      KillGroup();
      Shutdown();
    }
    throw ProtocolError("external predictor: " + message);
  }

  // The command runs under /bin/sh; its whole process group goes.
  void KillGroup() {
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
  }

  void TakeLines(std::vector<std::string>& lines, std::size_t expected) {
    std::size_t newline;
    while (lines.size() < expected &&
           (newline = buffer_.find('\n')) != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      buffer_.erase(0, newline + 1);
    }
  }

  std::string FirstLine() const {
    return buffer_.substr(0, std::min(buffer_.find('\n'), std::size_t{80}));
  }

  std::string ReapStatus() {
    int status = 0;
    const auto deadline = Clock::now() + std::chrono::milliseconds(500);
    while (true) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        return DescribeStatus(status);
      }
      if (r < 0 || Clock::now() >= deadline) return "closed its output";
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  bool failed_ = false;
};

ExternalPredictor::ExternalPredictor(std::string command,
                                     std::vector<std::string> features,
                                     ExternalOptions options)
    : Predictor(std::move(features)),
      command_(std::move(command)),
      options_(options) {
  if (this->features().empty()) throw ValidationError("empty feature set");
  session_ = std::make_unique<Session>(command_, options_.timeout);
  std::string hello =
      "HELLO CDP/1 " + std::to_string(this->features().size()) + " ";
  for (std::size_t i = 0; i < this->features().size(); ++i) {
    if (i > 0) hello += ',';
    hello += this->features()[i];
  }
  hello += '\n';
  const std::vector<std::string> reply =
      session_->Exchange(hello, 1, "handshake");
  if (reply[0] != "READY") {
    session_.reset();
    throw ProtocolError("external predictor: handshake mismatch, expected "
                        "'READY', got '" +
                        reply[0] + "'");
  }
}

ExternalPredictor::~ExternalPredictor() = default;

std::string ExternalPredictor::Describe() const {
  return "external(" + command_ + ")";
}

std::vector<double> ExternalPredictor::PredictRows(const Matrix& rows) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (rows.rows() == 0) return {};
  std::string request = "PREDICT " + std::to_string(rows.rows()) + "\n";
  request.reserve(request.size() + rows.rows() * rows.cols() * 24);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      if (c > 0) request += ',';
      request += FormatDouble17(rows(i, c));
    }
    request += '\n';
  }
  const std::vector<std::string> lines =
      session_->Exchange(request, rows.rows(), "PREDICT reply");
  std::vector<double> out(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::optional<double> v = ParseDouble(lines[i]);
    if (!v) {
      throw ProtocolError("external predictor: malformed reply line " +
                          std::to_string(i + 1) + ": '" + lines[i] + "'");
    }
    out[i] = *v;
  }
  return out;
}

std::shared_ptr<const ExternalPredictor> OpenExternal(
    std::string command, std::vector<std::string> features,
    ExternalOptions options) {
  return std::make_shared<const ExternalPredictor>(
      std::move(command), std::move(features), options);
}

}  // namespace cdp
