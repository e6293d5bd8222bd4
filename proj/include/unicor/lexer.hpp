#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unicor {

enum class TokenKind : std::uint8_t {
  Identifier,
  Keyword,
  Number,
  String,
  Operator,
  Punct,
  Comment,
  Whitespace,
};

struct Token {
  std::string text;
  TokenKind kind;
  std::size_t position = 0;  // byte offset in the source
};

struct TokenSeq {
  std::vector<Token> tokens;
  std::string language;

  std::string detokenize() const {
    std::string out;
    for (const auto& t : tokens) out += t.text;
    return out;
  }
};

struct LexError : std::runtime_error {
  std::size_t offset;
  LexError(const std::string& what, std::size_t off)
      : std::runtime_error(what + " at byte " + std::to_string(off)), offset(off) {}
};

namespace lexcfg {

struct LangConfig {
  std::set<std::string, std::less<>> keywords;
  bool hash_comment = false;    // '#' to end of line
  bool slash_comment = false;   // '//' and '/* */'
  bool triple_quoted = false;   // ''' and """ strings
};

inline const LangConfig& python() {
  static const LangConfig cfg{
      {"False", "None",   "True",  "and",      "as",    "assert", "async",  "await", "break",
       "class", "continue", "def",  "del",      "elif",  "else",   "except", "finally", "for",
       "from",  "global", "if",    "import",   "in",    "is",     "lambda", "nonlocal", "not",
       "or",    "pass",   "raise", "return",   "try",   "while",  "with",   "yield"},
      /*hash*/ true, /*slash*/ false, /*triple*/ true};
  return cfg;
}

inline const LangConfig& java() {
  static const LangConfig cfg{
      {"abstract", "assert",   "boolean",   "break",      "byte",      "case",       "catch",
       "char",     "class",    "const",     "continue",   "default",   "do",         "double",
       "else",     "enum",     "extends",   "final",      "finally",   "float",      "for",
       "goto",     "if",       "implements", "import",    "instanceof", "int",       "interface",
       "long",     "native",   "new",       "package",    "private",   "protected",  "public",
       "return",   "short",    "static",    "strictfp",   "super",     "switch",     "synchronized",
       "this",     "throw",    "throws",    "transient",  "try",       "void",       "volatile",
       "while"},
      /*hash*/ false, /*slash*/ true, /*triple*/ false};
  return cfg;
}

inline const LangConfig& generic() {
  static const LangConfig cfg{{}, /*hash*/ false, /*slash*/ true, /*triple*/ false};
  return cfg;
}

// The four toy surface languages emitted by the synthetic corpus
// generator. Keyword sets are pairwise disjoint (and disjoint from
// python/java) so language identity is carried purely by keywords.
inline const std::map<std::string, LangConfig, std::less<>>& toy_languages() {
  static const std::map<std::string, LangConfig, std::less<>> langs{
      {"alpha", {{"fun", "endfun", "give", "letv", "loopn", "whenx", "othw"}, false, true, false}},
      {"beta", {{"proc", "endproc", "emitv", "bindv", "cycle", "branch", "elsecase"}, false, true, false}},
      {"gamma", {{"routine", "endrt", "produce", "store", "iterate", "oncase", "fallback"}, false, true, false}},
      {"delta", {{"blockfn", "endblk", "yieldv", "holdv", "repeatn", "testv", "altv"}, false, true, false}},
  };
  return langs;
}

}  // namespace lexcfg

// True when a per-language keyword/comment table exists; unknown tags
// fall back to the generic C-style lexer.
inline bool language_supported(std::string_view language) {
  if (language == "python" || language == "java" || language == "generic") return true;
  return lexcfg::toy_languages().count(language) > 0;
}

inline const lexcfg::LangConfig& language_config(std::string_view language) {
  if (language == "python") return lexcfg::python();
  if (language == "java") return lexcfg::java();
  auto it = lexcfg::toy_languages().find(language);
  if (it != lexcfg::toy_languages().end()) return it->second;
  return lexcfg::generic();
}

namespace lexdetail {

inline bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_hex_digit(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
inline bool is_operator_char(char c) {
  return std::string_view("+-*/%=<>!&|^~?:").find(c) != std::string_view::npos;
}

}  // namespace lexdetail

// Classified, lossless token stream: concatenating token texts in order
// reproduces the input byte-for-byte. In strict mode an unterminated
// string or block comment raises LexError with the byte offset; in
// lenient mode the open construct is consumed to end of input, which the
// encoding and dedup paths rely on to never fail.
inline TokenSeq tokenize_code(std::string_view text, std::string_view language, bool strict = true) {
  const lexcfg::LangConfig& cfg = language_config(language);
  TokenSeq seq;
  seq.language = std::string(language);
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto emit = [&](std::size_t start, std::size_t end, TokenKind kind) {
    seq.tokens.push_back(Token{std::string(text.substr(start, end - start)), kind, start});
  };

  while (i < n) {
    const char c = text[i];
    const std::size_t start = i;

    if (lexdetail::is_space(c)) {
      while (i < n && lexdetail::is_space(text[i])) ++i;
      emit(start, i, TokenKind::Whitespace);
      continue;
    }

    if (cfg.hash_comment && c == '#') {
      while (i < n && text[i] != '\n') ++i;
      emit(start, i, TokenKind::Comment);
      continue;
    }

    if (cfg.slash_comment && c == '/' && i + 1 < n && text[i + 1] == '/') {
      while (i < n && text[i] != '\n') ++i;
      emit(start, i, TokenKind::Comment);
      continue;
    }

    if (cfg.slash_comment && c == '/' && i + 1 < n && text[i + 1] == '*') {
      i += 2;
      bool closed = false;
      while (i < n) {
        if (text[i] == '*' && i + 1 < n && text[i + 1] == '/') {
          i += 2;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed && strict) throw LexError("unterminated block comment", start);
      emit(start, i, TokenKind::Comment);
      continue;
    }

    if (c == '"' || c == '\'') {
      // triple-quoted string (python): may span lines
      if (cfg.triple_quoted && i + 2 < n && text[i + 1] == c && text[i + 2] == c) {
        i += 3;
        bool closed = false;
        while (i < n) {
          if (text[i] == '\\' && i + 1 < n) {
            i += 2;
            continue;
          }
          if (text[i] == c && i + 2 < n && text[i + 1] == c && text[i + 2] == c) {
            i += 3;
            closed = true;
            break;
          }
          if (text[i] == c && i + 2 >= n) {
            // dangling quote near EOF cannot close a triple quote
            ++i;
            continue;
          }
          ++i;
        }
        if (!closed && strict) throw LexError("unterminated string", start);
        emit(start, i, TokenKind::String);
        continue;
      }
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '\\' && i + 1 < n) {
          i += 2;
          continue;
        }
        if (text[i] == c) {
          ++i;
          closed = true;
          break;
        }
        if (text[i] == '\n') break;  // single-line strings end at newline
        ++i;
      }
      if (!closed && strict) throw LexError("unterminated string", start);
      emit(start, i, TokenKind::String);
      continue;
    }

    if (lexdetail::is_ident_start(c)) {
      while (i < n && lexdetail::is_ident_char(text[i])) ++i;
      std::string_view word = text.substr(start, i - start);
      bool kw = cfg.keywords.find(word) != cfg.keywords.end();
      emit(start, i, kw ? TokenKind::Keyword : TokenKind::Identifier);
      continue;
    }

    if (lexdetail::is_digit(c)) {
      if (c == '0' && i + 1 < n && (text[i + 1] == 'x' || text[i + 1] == 'X')) {
        i += 2;
        while (i < n && (lexdetail::is_hex_digit(text[i]) || text[i] == '_')) ++i;
      } else {
        while (i < n && (lexdetail::is_digit(text[i]) || text[i] == '_')) ++i;
        if (i < n && text[i] == '.' && i + 1 < n && lexdetail::is_digit(text[i + 1])) {
          ++i;
          while (i < n && (lexdetail::is_digit(text[i]) || text[i] == '_')) ++i;
        }
        if (i < n && (text[i] == 'e' || text[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (text[j] == '+' || text[j] == '-')) ++j;
          if (j < n && lexdetail::is_digit(text[j])) {
            i = j;
            while (i < n && lexdetail::is_digit(text[i])) ++i;
          }
        }
      }
      // type suffixes (1.5f, 100L, 0x1Fu)
      while (i < n && lexdetail::is_ident_start(text[i]) && text[i] != '_') ++i;
      emit(start, i, TokenKind::Number);
      continue;
    }

    if (lexdetail::is_operator_char(c)) {
      ++i;
      while (i < n && lexdetail::is_operator_char(text[i])) {
        // keep '//' and '/*' out of operator runs
        if (cfg.slash_comment && text[i] == '/' && i + 1 < n && (text[i + 1] == '/' || text[i + 1] == '*'))
          break;
        ++i;
      }
      emit(start, i, TokenKind::Operator);
      continue;
    }

    // everything else: brackets, separators, stray bytes
    ++i;
    emit(start, i, TokenKind::Punct);
  }

  return seq;
}

// Content tokens are what the encoder sees: whitespace and comments drop out.
inline bool is_content_kind(TokenKind k) {
  return k != TokenKind::Whitespace && k != TokenKind::Comment;
}

// Stack check over (), [], {} appearing as Punct tokens; brackets inside
// strings and comments do not participate.
inline bool brackets_balanced(const TokenSeq& seq) {
  std::vector<char> stack;
  for (const auto& t : seq.tokens) {
    if (t.kind != TokenKind::Punct || t.text.size() != 1) continue;
    const char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      const char open = (c == ')') ? '(' : (c == ']') ? '[' : '{';
      if (stack.empty() || stack.back() != open) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

}  // namespace unicor
