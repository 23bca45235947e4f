#include "sentitrade/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "sentitrade/error.hpp"

namespace sentitrade {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
    fail(ErrorKind::Io, what + ": " + std::strerror(errno));
}

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> parts;
    std::string p;
    while (in >> p) parts.push_back(p);
    return parts;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
    if (argv.empty()) fail(ErrorKind::Argument, "empty command");
    // A child that dies early must surface as a protocol error, not SIGPIPE.
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) sys_fail("pipe");
    if (pipe(out_pipe) != 0) sys_fail("pipe");
    pid_ = fork();
    if (pid_ < 0) sys_fail("fork");
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

ChildProcess::~ChildProcess() {
    try {
        finish();
    } catch (...) {
    }
}

void ChildProcess::write_line(const std::string& line) {
    out_buf_ += line;
    out_buf_ += '\n';
    if (out_buf_.size() > 1 << 14) flush();
}

void ChildProcess::flush() {
    std::size_t off = 0;
    while (off < out_buf_.size()) {
        ssize_t n = ::write(to_child_, out_buf_.data() + off, out_buf_.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EPIPE) fail(ErrorKind::Protocol, "peer closed its input");
            sys_fail("write to child");
        }
        off += static_cast<std::size_t>(n);
    }
    out_buf_.clear();
}

std::optional<std::string> ChildProcess::read_line() {
    while (true) {
        auto nl = in_buf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = in_buf_.substr(0, nl);
            in_buf_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (eof_) {
            if (in_buf_.empty()) return std::nullopt;
            std::string line;
            line.swap(in_buf_);
            return line;
        }
        char buf[4096];
        ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail("read from child");
        }
        if (n == 0) eof_ = true;
        else in_buf_.append(buf, static_cast<std::size_t>(n));
    }
}

void ChildProcess::close_input() {
    if (to_child_ < 0) return;
    flush();
    close(to_child_);
    to_child_ = -1;
}

void ChildProcess::terminate() {
    if (!finished_ && pid_ > 0) kill(pid_, SIGKILL);
}

int ChildProcess::finish() {
    if (finished_) return status_;
    finished_ = true;
    if (to_child_ >= 0) {
        try {
            flush();
        } catch (...) {
        }
        close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        // Drain so the child is never blocked writing.
        char buf[4096];
        while (::read(from_child_, buf, sizeof buf) > 0) {
        }
        close(from_child_);
        from_child_ = -1;
    }
    int st = 0;
    while (waitpid(pid_, &st, 0) < 0 && errno == EINTR) {
    }
    status_ = WIFEXITED(st) ? WEXITSTATUS(st) : 128 + (WIFSIGNALED(st) ? WTERMSIG(st) : 0);
    return status_;
}

int exchange_lines(ChildProcess& child, const std::vector<std::string>& requests,
                   const std::function<void(const std::string&, std::size_t)>& on_response) {
    std::exception_ptr write_error;
    std::thread writer([&] {
        try {
            for (const auto& line : requests) child.write_line(line);
            child.close_input();
        } catch (...) {
            write_error = std::current_exception();
        }
    });
    try {
        std::size_t line_no = 0;
        while (auto line = child.read_line()) {
            ++line_no;
            if (line->find_first_not_of(" \t\r") == std::string::npos) continue;
            on_response(*line, line_no);
        }
    } catch (...) {
        child.terminate();
        writer.join();
        child.finish();
        throw;
    }
    writer.join();
    const int status = child.finish();
    // A broken pipe only matters if answers are missing, which callers check.
    (void)write_error;
    return status;
}

}  // namespace sentitrade
