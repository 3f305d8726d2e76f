//
// Copyright 2026 The pacest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pacest/error.hpp"

namespace pacest {

// One child process speaking newline-delimited JSON over stdin/stdout.
// Single-flight: callers must serialize access per worker (the pool does).
class SubprocessWorker {
 public:
  explicit SubprocessWorker(const std::vector<std::string>& command) {
    if (command.empty()) {
      throw Error(ErrorCode::kInputConfig, "empty subprocess command");
    }
    // O_CLOEXEC keeps sibling children from inheriting these pipe ends;
    // otherwise closing a worker's stdin never reaches its child as EOF.
    int to_child[2], from_child[2], err_pipe[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0 ||
        pipe2(err_pipe, O_CLOEXEC) != 0) {
      throw Error(ErrorCode::kOracleSubprocess, "pipe2() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw Error(ErrorCode::kOracleSubprocess, "fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      dup2(err_pipe[1], STDERR_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      close(err_pipe[0]);
      close(err_pipe[1]);
      std::vector<char*> argv;
      argv.reserve(command.size() + 1);
      for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      std::perror("execvp");
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    close(err_pipe[1]);
    stdin_fd_ = to_child[1];
    stdout_ = fdopen(from_child[0], "r");
    stderr_fd_ = err_pipe[0];
    // stderr is drained lazily on failure; keep it non-blocking.
    fcntl(stderr_fd_, F_SETFL, O_NONBLOCK);
    if (stdout_ == nullptr) {
      throw Error(ErrorCode::kOracleSubprocess, "fdopen() failed");
    }
  }

  SubprocessWorker(const SubprocessWorker&) = delete;
  SubprocessWorker& operator=(const SubprocessWorker&) = delete;

  ~SubprocessWorker() {
    if (stdin_fd_ >= 0) close(stdin_fd_);
    if (stdout_ != nullptr) fclose(stdout_);
    if (stderr_fd_ >= 0) close(stderr_fd_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  nlohmann::json request(const nlohmann::json& req) {
    const std::string line = req.dump() + "\n";
    if (write_all(line) != 0) {
      fail("child closed stdin pipe");
    }
    std::string reply;
    if (!read_line(&reply)) {
      fail("child produced no reply line");
    }
    nlohmann::json parsed = nlohmann::json::parse(reply, nullptr, false);
    if (parsed.is_discarded()) {
      fail("child reply is not valid JSON: " + truncate(reply));
    }
    if (parsed.is_object() && parsed.contains("error")) {
      fail("child reported error: " + parsed["error"].dump());
    }
    return parsed;
  }

 private:
  int write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = write(stdin_fd_, data.data() + off, data.size() - off);
      if (n <= 0) return -1;
      off += static_cast<std::size_t>(n);
    }
    return 0;
  }

  bool read_line(std::string* out) {
    char* buf = nullptr;
    std::size_t cap = 0;
    const ssize_t n = getline(&buf, &cap, stdout_);
    if (n < 0) {
      free(buf);
      return false;
    }
    out->assign(buf, static_cast<std::size_t>(n));
    free(buf);
    while (!out->empty() && (out->back() == '\n' || out->back() == '\r')) {
      out->pop_back();
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& why) {
    std::string stderr_tail;
    char buf[4096];
    ssize_t n;
    while ((n = read(stderr_fd_, buf, sizeof(buf))) > 0) {
      stderr_tail.append(buf, static_cast<std::size_t>(n));
    }
    std::string msg = "subprocess oracle failure: " + why;
    if (!stderr_tail.empty()) msg += "; stderr: " + truncate(stderr_tail);
    throw Error(ErrorCode::kOracleSubprocess, msg);
  }

  static std::string truncate(const std::string& s) {
    return s.size() <= 2000 ? s : s.substr(0, 2000) + "...";
  }

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stderr_fd_ = -1;
  std::FILE* stdout_ = nullptr;
};

// Pool of worker processes, one in-flight request each. Requests are
// self-contained (seeds travel in the payload), so which worker serves a
// request cannot affect results.
class SubprocessPool {
 public:
  SubprocessPool(std::vector<std::string> command, unsigned procs)
      : command_(std::move(command)) {
    if (procs == 0) procs = 1;
    for (unsigned i = 0; i < procs; ++i) {
      workers_.push_back(std::make_unique<SubprocessWorker>(command_));
      free_.push_back(i);
    }
  }

  nlohmann::json request(const nlohmann::json& req) {
    unsigned idx;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return !free_.empty(); });
      idx = free_.back();
      free_.pop_back();
    }
    struct Return {
      SubprocessPool* pool;
      unsigned idx;
      ~Return() {
        std::lock_guard<std::mutex> lock(pool->mu_);
        pool->free_.push_back(idx);
        pool->cv_.notify_one();
      }
    } ret{this, idx};
    return workers_[idx]->request(req);
  }

  const std::vector<std::string>& command() const { return command_; }

 private:
  std::vector<std::string> command_;
  std::vector<std::unique_ptr<SubprocessWorker>> workers_;
  std::vector<unsigned> free_;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace pacest
