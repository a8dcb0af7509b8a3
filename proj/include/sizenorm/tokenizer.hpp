#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sizenorm {

enum class TokenKind { Numer, Alpha, Other };

std::string_view to_string(TokenKind kind);

struct Token {
  std::string text;  // upper-cased, never empty
  TokenKind kind = TokenKind::Other;

  bool operator==(const Token&) const = default;
};

struct TokenizedSize {
  std::string raw;
  std::vector<Token> tokens;
  std::vector<TokenKind> pattern;  // pattern[i] == tokens[i].kind

  bool same_tokens(const TokenizedSize& other) const { return tokens == other.tokens; }
};

/// Splits a size string into NUMER / ALPHA / OTHER tokens.
///
/// Input is trimmed and folded to upper case. Whitespace separates tokens and
/// a digit/letter boundary always splits ("14P" -> "14", "P"). A NUMER token
/// is a run of digits with at most one interior decimal point. Whole-plus-
/// fraction forms such as "7 1/2", "7-1/2" and "7½" are rewritten to decimals
/// first. "EXTRA" directly followed by an ALPHA token is fused with it, so
/// "EXTRA SMALL WIDE" yields ["EXTRA SMALL", "WIDE"]. Non-ASCII bytes are
/// grouped into OTHER tokens.
///
/// Throws EmptyInput when nothing but whitespace is given.
TokenizedSize tokenize(std::string_view raw);

/// Grouping key for a token-type pattern, e.g. "NUMER|ALPHA".
std::string pattern_key(const TokenizedSize& t);
std::string pattern_key(const std::vector<TokenKind>& pattern);

/// Tokens joined by single spaces. Re-tokenizing the result gives the same
/// pattern and tokens.
std::string render(const TokenizedSize& t);

}  // namespace sizenorm
