#include "fatigue/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include "fatigue/error.hpp"

namespace fatigue::csv {

namespace {
constexpr std::size_t kBufferSize = 1 << 20;
constexpr std::size_t kWriterFlushSize = 1 << 20;
}  // namespace

LineReader::LineReader(const std::string& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) throw Error("cannot open file: " + path);
    buffer_.resize(kBufferSize);
}

LineReader::~LineReader() {
    if (file_) std::fclose(file_);
}

bool LineReader::refill() {
    if (eof_) return false;
    len_ = std::fread(buffer_.data(), 1, buffer_.size(), file_);
    pos_ = 0;
    if (len_ == 0) {
        eof_ = true;
        return false;
    }
    return true;
}

std::optional<std::string_view> LineReader::next() {
    carry_.clear();
    while (true) {
        if (pos_ >= len_ && !refill()) {
            if (!carry_.empty()) {
                ++line_number_;
                if (!carry_.empty() && carry_.back() == '\r') carry_.pop_back();
                return std::string_view(carry_);
            }
            return std::nullopt;
        }
        const char* start = buffer_.data() + pos_;
        const char* nl = static_cast<const char*>(
            std::memchr(start, '\n', len_ - pos_));
        if (nl) {
            std::size_t n = static_cast<std::size_t>(nl - start);
            pos_ += n + 1;
            ++line_number_;
            if (carry_.empty()) {
                if (n > 0 && start[n - 1] == '\r') --n;
                return std::string_view(start, n);
            }
            carry_.append(start, n);
            if (!carry_.empty() && carry_.back() == '\r') carry_.pop_back();
            return std::string_view(carry_);
        }
        carry_.append(start, len_ - pos_);
        pos_ = len_;
    }
}

void split(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::optional<double> parse_double(std::string_view field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
        field.remove_suffix(1);
    if (field.empty()) return std::nullopt;
    if (field == "nan" || field == "NaN" || field == "NAN")
        return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
    return value;
}

std::optional<std::int64_t> parse_int(std::string_view field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
        field.remove_suffix(1);
    if (field.empty()) return std::nullopt;
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
    return value;
}

void format_double(double value, std::string& out) {
    if (std::isnan(value)) {
        out.append("nan");
        return;
    }
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    out.append(buf, ptr);
}

std::string format_double(double value) {
    std::string s;
    format_double(value, s);
    return s;
}

Writer::Writer(const std::string& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) throw Error("cannot open file for writing: " + path);
    buffer_.reserve(kWriterFlushSize + 4096);
}

Writer::~Writer() {
    if (file_) {
        flush();
        std::fclose(file_);
    }
}

void Writer::write(std::string_view text) {
    buffer_.append(text);
    if (buffer_.size() >= kWriterFlushSize) flush();
}

void Writer::write_double(double value) {
    format_double(value, buffer_);
    if (buffer_.size() >= kWriterFlushSize) flush();
}

void Writer::write_int(std::int64_t value) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    buffer_.append(buf, ptr);
    if (buffer_.size() >= kWriterFlushSize) flush();
}

void Writer::flush() {
    if (!buffer_.empty() && file_) {
        if (std::fwrite(buffer_.data(), 1, buffer_.size(), file_) != buffer_.size())
            throw Error("write failed: " + path_);
        buffer_.clear();
    }
}

void Writer::close() {
    flush();
    if (file_) {
        if (std::fclose(file_) != 0) {
            file_ = nullptr;
            throw Error("close failed: " + path_);
        }
        file_ = nullptr;
    }
}

}  // namespace fatigue::csv
