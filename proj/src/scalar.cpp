#include "tklab/scalar.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace tklab {

Rational rat(long num, long den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

namespace {

bool looks_like_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

Rational rat_parse(const std::string& text) {
  auto slash = text.find('/');
  std::string num = text.substr(0, slash);
  std::string den = slash == std::string::npos ? "1" : text.substr(slash + 1);
  if (!looks_like_integer(num) || !looks_like_integer(den))
    throw std::invalid_argument("malformed rational: '" + text + "'");
  Rational q;
  if (mpq_set_str(q.get_mpq_t(), (num + "/" + den).c_str(), 10) != 0)
    throw std::invalid_argument("malformed rational: '" + text + "'");
  if (sgn(q.get_den()) == 0)
    throw std::invalid_argument("zero denominator: '" + text + "'");
  q.canonicalize();
  return q;
}

std::string rat_str(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string Scalar::str() const {
  if (is_rational()) return rat_str(rational());
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, real_value());
  return std::string(buf, end);
}

}  // namespace tklab
