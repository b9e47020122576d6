// SPDX-License-Identifier: Apache-2.0
#include "minagent/proc.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

extern char** environ;

namespace minagent {
namespace {

void append_capped(std::string& sink, const char* data, ssize_t n, std::size_t cap) {
  if (n <= 0 || sink.size() >= cap) return;
  std::size_t room = cap - sink.size();
  sink.append(data, std::min(room, static_cast<std::size_t>(n)));
}

}  // namespace

ProcResult run_argv(const std::vector<std::string>& argv,
                    const std::filesystem::path& cwd,
                    const ProcLimits& limits,
                    const std::optional<std::vector<std::string>>& env) {
  if (argv.empty()) throw std::runtime_error("run_argv: empty argv");

  int out_pipe[2];
  int err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
    throw std::runtime_error("run_argv: pipe failed");
  }

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  std::vector<char*> cenv;
  if (env) {
    cenv.reserve(env->size() + 1);
    for (const auto& e : *env) cenv.push_back(const_cast<char*>(e.c_str()));
    cenv.push_back(nullptr);
  }

  pid_t pid = fork();
  if (pid < 0) {
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);
    throw std::runtime_error("run_argv: fork failed");
  }

  if (pid == 0) {
    setpgid(0, 0);  // own process group so the watchdog can kill children too
    if (chdir(cwd.c_str()) != 0) _exit(126);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);
    if (env) {
      execve(cargv[0], cargv.data(), cenv.data());
      // execve does not search PATH; retry via execvpe semantics by hand.
      environ = cenv.data();
      execvp(cargv[0], cargv.data());
    } else {
      execvp(cargv[0], cargv.data());
    }
    _exit(127);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  ProcResult result;
  const auto deadline = std::chrono::steady_clock::now() + limits.timeout;
  bool out_open = true;
  bool err_open = true;
  char buf[8192];

  while (out_open || err_open) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      break;
    }
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    struct pollfd fds[2];
    nfds_t nfds = 0;
    int out_idx = -1;
    int err_idx = -1;
    if (out_open) { out_idx = static_cast<int>(nfds); fds[nfds++] = {out_pipe[0], POLLIN, 0}; }
    if (err_open) { err_idx = static_cast<int>(nfds); fds[nfds++] = {err_pipe[0], POLLIN, 0}; }
    int rc = poll(fds, nfds, static_cast<int>(std::min<long long>(wait_ms, 200)));
    if (rc < 0 && errno != EINTR) break;
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(out_pipe[0], buf, sizeof buf);
      if (n > 0) append_capped(result.out, buf, n, limits.output_cap);
      else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) out_open = false;
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(err_pipe[0], buf, sizeof buf);
      if (n > 0) append_capped(result.err, buf, n, limits.output_cap);
      else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) err_open = false;
    }
  }

  // Drain anything left after a kill so the child can't block on a full pipe.
  if (result.timed_out) {
    ssize_t n;
    while ((n = read(out_pipe[0], buf, sizeof buf)) > 0) append_capped(result.out, buf, n, limits.output_cap);
    while ((n = read(err_pipe[0], buf, sizeof buf)) > 0) append_capped(result.err, buf, n, limits.output_cap);
  }
  close(out_pipe[0]);
  close(err_pipe[0]);

  int status = 0;
  if (waitpid(pid, &status, 0) == pid) {
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

ProcResult run_shell_command(const std::string& command,
                             const std::filesystem::path& cwd,
                             const ProcLimits& limits) {
  return run_argv({"/bin/sh", "-c", command}, cwd, limits);
}

std::vector<std::string> environment_without(const std::vector<std::string>& name_prefixes) {
  std::vector<std::string> kept;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    auto name = entry.substr(0, entry.find('='));
    bool drop = false;
    for (const auto& prefix : name_prefixes) {
      if (name.substr(0, prefix.size()) == prefix) { drop = true; break; }
    }
    if (!drop) kept.emplace_back(entry);
  }
  return kept;
}

}  // namespace minagent
