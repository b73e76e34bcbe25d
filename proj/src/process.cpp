#include "panicfix/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

namespace panicfix {

CommandResult run_command(const std::string& command, const std::string& cwd,
                          const std::map<std::string, std::string>& env,
                          std::chrono::milliseconds budget) {
  CommandResult result;
  int pipefd[2];
  if (pipe(pipefd) != 0) {
    result.output = std::string("pipe failed: ") + std::strerror(errno);
    return result;
  }

  pid_t pid = fork();
  if (pid < 0) {
    close(pipefd[0]);
    close(pipefd[1]);
    result.output = std::string("fork failed: ") + std::strerror(errno);
    return result;
  }
  if (pid == 0) {
    // Child: own process group so a timeout kill reaps grandchildren too.
    setpgid(0, 0);
    dup2(pipefd[1], STDOUT_FILENO);
    dup2(pipefd[1], STDERR_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
    for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(pipefd[1]);
  const auto deadline = std::chrono::steady_clock::now() + budget;
  bool killed = false;
  char buf[4096];
  while (true) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    int wait_ms = killed ? 1000 : static_cast<int>(std::max<int64_t>(remaining.count(), 0));
    struct pollfd pfd = {pipefd[0], POLLIN, 0};
    int rc = poll(&pfd, 1, wait_ms);
    if (rc > 0) {
      ssize_t n = read(pipefd[0], buf, sizeof(buf));
      if (n > 0) {
        result.output.append(buf, static_cast<size_t>(n));
        continue;
      }
      break;  // EOF
    }
    if (rc == 0) {
      if (killed) break;  // grandchildren may hold the pipe; stop reading
      if (std::chrono::steady_clock::now() >= deadline) {
        kill(-pid, SIGKILL);
        result.timed_out = true;
        killed = true;
      }
    } else if (errno != EINTR) {
      break;
    }
  }
  close(pipefd[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

}  // namespace panicfix
