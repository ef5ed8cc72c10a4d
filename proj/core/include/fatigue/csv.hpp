#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fatigue::csv {

// Buffered line reader for large CSV files. Lines are returned as views
// into the internal buffer and are invalidated by the next call.
class LineReader {
public:
    explicit LineReader(const std::string& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    // Next line without the trailing newline ('\r' stripped too).
    std::optional<std::string_view> next();

    std::size_t line_number() const { return line_number_; }
    const std::string& path() const { return path_; }

private:
    bool refill();

    std::string path_;
    std::FILE* file_ = nullptr;
    std::vector<char> buffer_;
    std::size_t pos_ = 0;
    std::size_t len_ = 0;
    std::string carry_;
    std::size_t line_number_ = 0;
    bool eof_ = false;
};

// Splits one CSV line on commas (no quoting; the file formats in this
// project never embed commas). Appends views into `line` to `out`.
void split(std::string_view line, std::vector<std::string_view>& out);

// Locale-independent number parsing. "nan" (any case) parses to quiet NaN.
std::optional<double> parse_double(std::string_view field);
std::optional<std::int64_t> parse_int(std::string_view field);

// Shortest round-trip formatting (std::to_chars); NaN renders as "nan".
// Used everywhere a double reaches an output file, so reruns are
// byte-identical.
void format_double(double value, std::string& out);
std::string format_double(double value);

// Append-only buffered file writer; flushes in large chunks.
class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void write(std::string_view text);
    void write_double(double value);
    void write_int(std::int64_t value);
    void close();  // flush + close; throws on I/O failure

private:
    void flush();

    std::string path_;
    std::FILE* file_ = nullptr;
    std::string buffer_;
};

}  // namespace fatigue::csv
