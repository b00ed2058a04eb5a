#include "roilink/plugin.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "roilink/error.hpp"
#include "roilink/image.hpp"
#include "roilink/image_io.hpp"

extern char** environ;

namespace roilink {

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

std::vector<ScoredBox> parse_plugin_output(std::string_view text, const RectPx& tile) {
  std::vector<ScoredBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    double x, y, w, h, score;
    std::string extra;
    if (!(fields >> x >> y >> w >> h >> score) || (fields >> extra) || !std::isfinite(x) ||
        !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h) || w < 0 || h < 0 ||
        !(score >= 0.0 && score <= 1.0)) {
      throw ParseError("malformed detection: '" + line + "'", "line " + std::to_string(lineno));
    }
    const int x0 = static_cast<int>(std::lround(x)), y0 = static_cast<int>(std::lround(y));
    const int x1 = static_cast<int>(std::lround(x + w)), y1 = static_cast<int>(std::lround(y + h));
    const RectPx mapped =
        intersect({tile.x + x0, tile.y + y0, x1 - x0, y1 - y0}, tile);
    if (mapped.empty()) continue;
    out.push_back({mapped, score});
  }
  return out;
}

PluginResult run_detector_plugin(const wire::RoiTile& tile, const PluginSpec& spec) {
  ignore_sigpipe();
  PluginResult result;
  auto fail = [&](std::string why) {
    result.ok = false;
    result.boxes.clear();
    result.error = std::move(why);
    return result;
  };

  RgbImage img({tile.rect.w, tile.rect.h});
  img.pixels = tile.pixels;
  const std::vector<std::uint8_t> png = encode_png(img);

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) return fail(std::strerror(errno));
  Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) return fail(std::strerror(errno));
  Fd out_r(out_pipe[0]), out_w(out_pipe[1]);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_r.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_w.get(), STDOUT_FILENO);
  const char* argv[] = {"/bin/sh", "-c", spec.command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return fail(std::string("spawn failed: ") + std::strerror(rc));
  in_r.reset();
  out_w.reset();
  ::fcntl(in_w.get(), F_SETFL, O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() + spec.timeout;
  std::size_t written = 0;
  std::string output;
  bool timed_out = false;
  while (out_r.get() >= 0) {
    if (written == png.size()) in_w.reset();
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {out_r.get(), POLLIN, 0};
    if (in_w.get() >= 0) fds[n++] = {in_w.get(), POLLOUT, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    if (::poll(fds, n, static_cast<int>(left.count())) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n > 1 && fds[1].revents) {
      const ssize_t k = ::write(in_w.get(), png.data() + written, png.size() - written);
      if (k > 0) {
        written += static_cast<std::size_t>(k);
      } else if (k < 0 && errno != EAGAIN) {
        in_w.reset();  // plugin stopped reading; its output still counts
        written = png.size();
      }
    }
    if (fds[0].revents) {
      char buf[4096];
      const ssize_t k = ::read(out_r.get(), buf, sizeof buf);
      if (k > 0) {
        output.append(buf, static_cast<std::size_t>(k));
      } else if (k == 0 || errno != EINTR) {
        out_r.reset();
      }
    }
  }

  int status = 0;
  while (!timed_out) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid || (w < 0 && errno != EINTR)) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    ::usleep(1000);
  }
  if (timed_out) {
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
  }
  if (timed_out) return fail("timed out after " + std::to_string(spec.timeout.count()) + " ms");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    return fail("plugin exited with status " +
                std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  try {
    result.boxes = parse_plugin_output(output, tile.rect);
  } catch (const ParseError& e) {
    return fail(e.what());
  }
  return result;
}

}  // namespace roilink
