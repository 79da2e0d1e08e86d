#ifndef IPS_TEXT_IO_H_
#define IPS_TEXT_IO_H_

#include <optional>
#include <string>
#include <string_view>

namespace ips {

// Shortest representation that parses back to the same double.
std::string FormatDouble(double v);

std::optional<double> ParseDouble(std::string_view text);
std::optional<long long> ParseInt(std::string_view text);

std::string_view Trim(std::string_view text);

}  // namespace ips

#endif  // IPS_TEXT_IO_H_
