#include "modflight/csv.hpp"

#include <charconv>
#include <ostream>

#include "modflight/errors.hpp"

namespace modflight::csv {

std::string format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_row(std::ostream& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        out << format(values[i]);
    }
    out << '\n';
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> out;
    std::string trimmed = line;
    if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
    for (const auto& field : split(trimmed)) {
        double v = 0.0;
        const char* first = field.data();
        const char* last = field.data() + field.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last) {
            throw Error(ErrorKind::ParseError, "bad numeric field '" + field + "'");
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace modflight::csv
