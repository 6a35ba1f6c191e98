#ifndef CBBL_SRC_FORMAT_HPP
#define CBBL_SRC_FORMAT_HPP

#include <charconv>
#include <string>

namespace cbbl::detail {

// Shortest representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace cbbl::detail

#endif // CBBL_SRC_FORMAT_HPP
