#include "detox/jsonl.hpp"

namespace detox {

void for_each_line(
    std::istream& in,
    const std::function<void(std::uint64_t, const std::string&)>& fn) {
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    fn(line_no, line);
  }
}

}  // namespace detox
