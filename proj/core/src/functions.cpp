#include "sdelab/functions.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdelab {

namespace {

double term_value(const FnTerm& t, double x) {
  switch (t.kind) {
    case FnTerm::Kind::poly: {
      double acc = 0.0;
      for (std::size_t i = t.params.size(); i-- > 0;)
        acc = acc * x + t.params[i];
      return acc;
    }
    case FnTerm::Kind::sine:
      return t.params[0] * std::sin(t.params[1] * x + t.params[2]);
    case FnTerm::Kind::abspow:
      return t.params[0] * std::pow(std::abs(x - t.params[1]), t.params[2]);
    case FnTerm::Kind::rough: {
      const double amp = t.params[0];
      const double u = x - t.params[1];
      const double alpha = t.params[2];
      const int levels = static_cast<int>(t.params[3]);
      double acc = 0.0;
      double scale = 1.0;
      double freq = 1.0;
      const double decay = std::pow(2.0, -alpha);
      for (int k = 0; k < levels; ++k) {
        acc += scale * std::cos(freq * u);
        scale *= decay;
        freq *= 2.0;
      }
      return amp * acc;
    }
  }
  return 0.0;
}

double term_deriv(const FnTerm& t, double x) {
  switch (t.kind) {
    case FnTerm::Kind::poly: {
      double acc = 0.0;
      for (std::size_t i = t.params.size(); i-- > 1;)
        acc = acc * x + t.params[i] * static_cast<double>(i);
      return acc;
    }
    case FnTerm::Kind::sine:
      return t.params[0] * t.params[1] * std::cos(t.params[1] * x + t.params[2]);
    case FnTerm::Kind::abspow: {
      const double u = x - t.params[1];
      const double e = t.params[2];
      if (u == 0.0) return 0.0;
      const double s = u > 0.0 ? 1.0 : -1.0;
      return t.params[0] * e * std::pow(std::abs(u), e - 1.0) * s;
    }
    case FnTerm::Kind::rough: {
      const double amp = t.params[0];
      const double u = x - t.params[1];
      const double alpha = t.params[2];
      const int levels = static_cast<int>(t.params[3]);
      double acc = 0.0;
      double scale = 1.0;
      double freq = 1.0;
      const double decay = std::pow(2.0, -alpha);
      for (int k = 0; k < levels; ++k) {
        acc -= scale * freq * std::sin(freq * u);
        scale *= decay;
        freq *= 2.0;
      }
      return amp * acc;
    }
  }
  return 0.0;
}

double term_deriv2(const FnTerm& t, double x) {
  switch (t.kind) {
    case FnTerm::Kind::poly: {
      double acc = 0.0;
      for (std::size_t i = t.params.size(); i-- > 2;)
        acc = acc * x +
              t.params[i] * static_cast<double>(i) * static_cast<double>(i - 1);
      return acc;
    }
    case FnTerm::Kind::sine: {
      const double f = t.params[1];
      return -t.params[0] * f * f * std::sin(f * x + t.params[2]);
    }
    case FnTerm::Kind::abspow: {
      const double u = x - t.params[1];
      const double e = t.params[2];
      if (u == 0.0) return 0.0;
      return t.params[0] * e * (e - 1.0) * std::pow(std::abs(u), e - 2.0);
    }
    case FnTerm::Kind::rough: {
      const double amp = t.params[0];
      const double u = x - t.params[1];
      const double alpha = t.params[2];
      const int levels = static_cast<int>(t.params[3]);
      double acc = 0.0;
      double scale = 1.0;
      double freq = 1.0;
      const double decay = std::pow(2.0, -alpha);
      for (int k = 0; k < levels; ++k) {
        acc -= scale * freq * freq * std::cos(freq * u);
        scale *= decay;
        freq *= 2.0;
      }
      return amp * acc;
    }
  }
  return 0.0;
}

std::size_t term_arity_min(FnTerm::Kind k) {
  switch (k) {
    case FnTerm::Kind::poly:
      return 0;
    case FnTerm::Kind::sine:
      return 3;
    case FnTerm::Kind::abspow:
      return 3;
    case FnTerm::Kind::rough:
      return 4;
  }
  return 0;
}

const char* term_name(FnTerm::Kind k) {
  switch (k) {
    case FnTerm::Kind::poly:
      return "poly";
    case FnTerm::Kind::sine:
      return "sin";
    case FnTerm::Kind::abspow:
      return "abspow";
    case FnTerm::Kind::rough:
      return "rough";
  }
  return "?";
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double FnDescriptor::value(double x) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += term_value(t, x);
  return acc;
}

double FnDescriptor::deriv(double x) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += term_deriv(t, x);
  return acc;
}

double FnDescriptor::deriv2(double x) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += term_deriv2(t, x);
  return acc;
}

bool FnDescriptor::is_zero() const {
  for (const auto& t : terms) {
    if (t.kind != FnTerm::Kind::poly) return false;
    for (double c : t.params)
      if (c != 0.0) return false;
  }
  return true;
}

std::string FnDescriptor::format() const {
  if (terms.empty()) return "poly()";
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += term_name(terms[i].kind);
    out += '(';
    for (std::size_t j = 0; j < terms[i].params.size(); ++j) {
      if (j) out += ',';
      out += fmt_double(terms[i].params[j]);
    }
    out += ')';
  }
  return out;
}

FnDescriptor FnDescriptor::parse(const std::string& text) {
  FnDescriptor fd;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  };
  skip_ws();
  while (pos < text.size()) {
    std::size_t name_start = pos;
    while (pos < text.size() &&
           (std::isalpha(static_cast<unsigned char>(text[pos]))))
      ++pos;
    const std::string name = text.substr(name_start, pos - name_start);
    FnTerm term;
    if (name == "poly")
      term.kind = FnTerm::Kind::poly;
    else if (name == "sin")
      term.kind = FnTerm::Kind::sine;
    else if (name == "abspow")
      term.kind = FnTerm::Kind::abspow;
    else if (name == "rough")
      term.kind = FnTerm::Kind::rough;
    else
      throw std::invalid_argument("FnDescriptor: unknown term '" + name + "'");
    skip_ws();
    if (pos >= text.size() || text[pos] != '(')
      throw std::invalid_argument("FnDescriptor: expected '(' after " + name);
    ++pos;
    skip_ws();
    while (pos < text.size() && text[pos] != ')') {
      std::size_t consumed = 0;
      const double v = std::stod(text.substr(pos), &consumed);
      term.params.push_back(v);
      pos += consumed;
      skip_ws();
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        skip_ws();
      }
    }
    if (pos >= text.size())
      throw std::invalid_argument("FnDescriptor: missing ')'");
    ++pos;  // ')'
    if (term.params.size() < term_arity_min(term.kind))
      throw std::invalid_argument(std::string("FnDescriptor: too few arguments for ") +
                                  term_name(term.kind));
    if (term.kind == FnTerm::Kind::rough &&
        (term.params[3] < 1 || term.params[3] > 40))
      throw std::invalid_argument("FnDescriptor: rough levels out of range");
    fd.terms.push_back(std::move(term));
    skip_ws();
    if (pos < text.size()) {
      if (text[pos] != '+')
        throw std::invalid_argument("FnDescriptor: expected '+' between terms");
      ++pos;
      skip_ws();
    }
  }
  return fd;
}

FnDescriptor FnDescriptor::constant(double c) {
  FnDescriptor fd;
  fd.terms.push_back(FnTerm{FnTerm::Kind::poly, {c}});
  return fd;
}

}  // namespace sdelab
