#pragma once

// Text form of a JointPMF:
//
//   y:2 v1:3
//   0 0 0.125
//   0 1 0.125
//   ...
//
// Header lists `name:cardinality` pairs; then one line per cell in row-major
// order with the outcome tuple followed by its probability. Blank lines and
// lines starting with '#' are ignored.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mvib/oracle.hpp"

namespace mvib {

inline constexpr double kParseSumTolerance = 1e-9;

inline void write_pmf(std::ostream& out, const JointPMF& pmf) {
  const auto& vars = pmf.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    out << (i ? " " : "") << vars[i].name << ':' << vars[i].cardinality;
  }
  out << '\n';
  std::vector<std::size_t> digit(vars.size(), 0);
  char buf[64];
  for (double p : pmf.probabilities()) {
    for (std::size_t v = 0; v < vars.size(); ++v) out << digit[v] << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out << buf << '\n';
    for (std::size_t v = vars.size(); v-- > 0;) {
      if (++digit[v] < vars[v].cardinality) break;
      digit[v] = 0;
    }
  }
}

inline std::string format_pmf(const JointPMF& pmf) {
  std::ostringstream out;
  write_pmf(out, pmf);
  return out.str();
}

inline JointPMF read_pmf(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_content_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("pmf line " + std::to_string(line_no) + ": " + why);
  };

  if (!next_content_line()) throw FormatError("pmf: missing header line");
  std::vector<VariableSpec> vars;
  {
    std::istringstream header(line);
    std::string token;
    while (header >> token) {
      const auto colon = token.rfind(':');
      if (colon == std::string::npos || colon == 0) throw fail("header token '" + token + "' is not name:cardinality");
      std::size_t card = 0;
      const char* first = token.data() + colon + 1;
      const char* last = token.data() + token.size();
      auto [ptr, ec] = std::from_chars(first, last, card);
      if (ec != std::errc() || ptr != last || card == 0) throw fail("bad cardinality in '" + token + "'");
      vars.push_back({token.substr(0, colon), card});
    }
  }
  if (vars.empty()) throw fail("header lists no variables");
  const std::size_t cells = detail::checked_cells(vars);

  std::vector<double> probs(cells, 0.0);
  std::vector<std::size_t> expected(vars.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!next_content_line()) throw FormatError("pmf: expected " + std::to_string(cells) + " cells, got " + std::to_string(cell));
    std::istringstream row(line);
    for (std::size_t v = 0; v < vars.size(); ++v) {
      long long digit = -1;
      if (!(row >> digit)) throw fail("missing outcome component");
      if (digit < 0 || static_cast<std::size_t>(digit) != expected[v]) throw fail("cells are not in row-major order");
    }
    std::string ptoken;
    if (!(row >> ptoken)) throw fail("missing probability");
    try {
      std::size_t used = 0;
      probs[cell] = std::stod(ptoken, &used);
      if (used != ptoken.size()) throw fail("bad probability '" + ptoken + "'");
    } catch (const std::logic_error&) {
      throw fail("bad probability '" + ptoken + "'");
    }
    std::string extra;
    if (row >> extra) throw fail("trailing tokens");
    if (!(probs[cell] >= 0.0) || !std::isfinite(probs[cell])) throw fail("probability must be finite and >= 0");
    for (std::size_t v = vars.size(); v-- > 0;) {
      if (++expected[v] < vars[v].cardinality) break;
      expected[v] = 0;
    }
  }
  if (next_content_line()) throw fail("more cells than the header declares");

  detail::CompensatedSum total;
  for (double p : probs) total.add(p);
  if (std::abs(total.value() - 1.0) > kParseSumTolerance) {
    throw FormatError("pmf: probabilities sum to " + std::to_string(total.value()) + ", outside 1 +/- 1e-9");
  }
  return JointPMF::from_weights(std::move(vars), std::move(probs));
}

inline JointPMF parse_pmf(const std::string& text) {
  std::istringstream in(text);
  return read_pmf(in);
}

}  // namespace mvib
