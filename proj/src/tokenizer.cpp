#include "sizenorm/tokenizer.hpp"

#include <array>
#include <cctype>
#include <utility>

#include "sizenorm/error.hpp"

namespace sizenorm {
namespace {

struct Fraction {
  std::string_view text;
  std::string_view decimals;  // appended after the whole part, '.' included
};

constexpr std::array<Fraction, 9> kFractions{{
    {"1/4", ".25"},
    {"1/2", ".5"},
    {"3/4", ".75"},
    {"1/3", ".33"},
    {"2/3", ".67"},
    {"1/8", ".125"},
    {"3/8", ".375"},
    {"5/8", ".625"},
    {"7/8", ".875"},
}};

// UTF-8 vulgar fractions.
constexpr std::array<Fraction, 3> kGlyphFractions{{
    {"\xC2\xBC", ".25"},
    {"\xC2\xBD", ".5"},
    {"\xC2\xBE", ".75"},
}};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string fold_upper(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    auto u = static_cast<unsigned char>(c);
    out.push_back(u < 0x80 ? static_cast<char>(std::toupper(u)) : c);
  }
  return out;
}

bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.substr(pos, prefix.size()) == prefix;
}

// Rewrites "<int> 1/2", "<int>-1/2" and "<int>½" into "<int>.5".
std::string normalize_fractions(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    bool number_start = is_digit(s[i]) && (i == 0 || (!is_digit(s[i - 1]) && s[i - 1] != '.'));
    if (!number_start) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t end = i;
    while (end < s.size() && is_digit(s[end])) ++end;
    std::string_view whole = s.substr(i, end - i);

    std::string_view decimals;
    std::size_t consumed = end;
    for (const auto& g : kGlyphFractions) {
      if (starts_with_at(s, end, g.text)) {
        decimals = g.decimals;
        consumed = end + g.text.size();
        break;
      }
    }
    if (decimals.empty() && end < s.size() && (s[end] == ' ' || s[end] == '-')) {
      std::size_t frac = end + 1;
      if (s[end] == ' ') {
        while (frac < s.size() && s[frac] == ' ') ++frac;
      }
      for (const auto& f : kFractions) {
        std::size_t after = frac + f.text.size();
        if (starts_with_at(s, frac, f.text) && (after == s.size() || !is_digit(s[after]))) {
          decimals = f.decimals;
          consumed = after;
          break;
        }
      }
    }
    out.append(whole);
    out.append(decimals);
    i = decimals.empty() ? end : consumed;
  }
  return out;
}

bool ends_with_extra_word(std::string_view text) {
  constexpr std::string_view kExtra = "EXTRA";
  if (text.size() < kExtra.size() || text.substr(text.size() - kExtra.size()) != kExtra) return false;
  return text.size() == kExtra.size() || text[text.size() - kExtra.size() - 1] == ' ';
}

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Numer:
      return "NUMER";
    case TokenKind::Alpha:
      return "ALPHA";
    case TokenKind::Other:
      return "OTHER";
  }
  return "OTHER";
}

TokenizedSize tokenize(std::string_view raw) {
  std::string s = normalize_fractions(fold_upper(raw));

  std::vector<Token> scanned;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    TokenKind kind;
    if (is_digit(c)) {
      kind = TokenKind::Numer;
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
    } else if (is_upper(c)) {
      kind = TokenKind::Alpha;
      while (i < s.size() && is_upper(s[i])) ++i;
    } else {
      kind = TokenKind::Other;
      while (i < s.size() && !is_space(s[i]) && !is_digit(s[i]) && !is_upper(s[i])) ++i;
    }
    scanned.push_back(Token{s.substr(start, i - start), kind});
  }
  if (scanned.empty()) throw EmptyInput("empty size string");

  TokenizedSize out;
  out.raw = std::string(raw);
  for (auto& tok : scanned) {
    if (tok.kind == TokenKind::Alpha && !out.tokens.empty() && out.tokens.back().kind == TokenKind::Alpha &&
        ends_with_extra_word(out.tokens.back().text)) {
      out.tokens.back().text += ' ';
      out.tokens.back().text += tok.text;
      continue;
    }
    out.tokens.push_back(std::move(tok));
  }
  out.pattern.reserve(out.tokens.size());
  for (const auto& tok : out.tokens) out.pattern.push_back(tok.kind);
  return out;
}

std::string pattern_key(const std::vector<TokenKind>& pattern) {
  std::string key;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (i > 0) key += '|';
    key += to_string(pattern[i]);
  }
  return key;
}

std::string pattern_key(const TokenizedSize& t) { return pattern_key(t.pattern); }

std::string render(const TokenizedSize& t) {
  std::string out;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += t.tokens[i].text;
  }
  return out;
}

}  // namespace sizenorm
