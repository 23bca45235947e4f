#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sentitrade {

/// A child process connected through its standard input and output. Used by
/// the classifier and external-model protocols.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    void write_line(const std::string& line);
    void flush();
    /// Next line without its terminator, or nullopt at end of stream.
    std::optional<std::string> read_line();
    /// Flushes and closes the child's stdin.
    void close_input();
    void terminate();
    /// Closes the child's stdin and waits; returns the exit status.
    int finish();

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string out_buf_;
    std::string in_buf_;
    bool eof_ = false;
    bool finished_ = false;
    int status_ = 0;
};

/// Streams `requests` to the child from a helper thread, then closes its
/// input, while the calling thread hands every non-blank response line and
/// its 1-based line number to `on_response`. If the callback throws, the
/// child is killed and the exception propagates. Returns the exit status.
int exchange_lines(ChildProcess& child, const std::vector<std::string>& requests,
                   const std::function<void(const std::string&, std::size_t)>& on_response);

/// Splits a command line on whitespace; no quoting.
std::vector<std::string> split_command(const std::string& command);

}  // namespace sentitrade
