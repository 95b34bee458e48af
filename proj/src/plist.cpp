#include "chainaudit/plist.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <string_view>
#include <system_error>

#include "chainaudit/error.hpp"

namespace chainaudit {

namespace {

constexpr std::size_t kMaxDepth = 256;
constexpr std::size_t kMaxDecodedObjects = 1'000'000;

[[noreturn]] void malformed(const std::string& what, std::size_t offset) {
  throw Error(ErrorCode::MalformedPlist, what + " at byte offset " + std::to_string(offset));
}

[[noreturn]] void unsupported(std::string_view kind, std::size_t offset) {
  throw Error(ErrorCode::UnsupportedObject,
              "object kind '" + std::string(kind) + "' at byte offset " + std::to_string(offset));
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "<real:nan>";
  if (std::isinf(v)) return v > 0 ? "<real:inf>" : "<real:-inf>";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return "<real:" + std::string(buf, res.ptr) + ">";
}

// ---------------------------------------------------------------------------
// Binary (bplist00)

class BinaryReader {
 public:
  explicit BinaryReader(std::span<const std::uint8_t> data) : data_(data) {}

  PlistValue read() {
    if (data_.size() < 8 + 32) malformed("binary plist shorter than header plus trailer", data_.size());
    const std::size_t trailer = data_.size() - 32;
    offset_size_ = data_[trailer + 6];
    ref_size_ = data_[trailer + 7];
    object_count_ = read_be(trailer + 8, 8);
    const std::uint64_t root = read_be(trailer + 16, 8);
    table_offset_ = read_be(trailer + 24, 8);

    if (offset_size_ < 1 || offset_size_ > 8) malformed("invalid offset int size", trailer + 6);
    if (ref_size_ < 1 || ref_size_ > 8) malformed("invalid object ref size", trailer + 7);
    if (object_count_ == 0) malformed("no objects", trailer + 8);
    if (root >= object_count_) malformed("root object index out of range", trailer + 16);
    if (table_offset_ < 8 || table_offset_ >= trailer) malformed("offset table outside file", trailer + 24);
    if (object_count_ > (trailer - table_offset_) / offset_size_) {
      malformed("offset table overruns trailer", table_offset_);
    }
    in_progress_.assign(static_cast<std::size_t>(object_count_), false);
    return read_object(root, 0);
  }

 private:
  std::uint64_t read_be(std::size_t pos, std::size_t n) const {
    if (pos > data_.size() || n > data_.size() - pos) malformed("read past end of data", pos);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v = (v << 8) | data_[pos + i];
    return v;
  }

  std::size_t object_offset(std::uint64_t index) const {
    if (index >= object_count_) malformed("object reference out of range", table_offset_);
    std::uint64_t off = read_be(static_cast<std::size_t>(table_offset_ + index * offset_size_), offset_size_);
    if (off < 8 || off >= table_offset_) {
      malformed("object offset outside object area", static_cast<std::size_t>(table_offset_ + index * offset_size_));
    }
    return static_cast<std::size_t>(off);
  }

  // Length nibble 0xF means an integer object follows with the real count.
  std::uint64_t read_count(std::size_t marker_pos, std::uint8_t nibble, std::size_t& cursor) const {
    cursor = marker_pos + 1;
    if (nibble != 0xF) return nibble;
    if (cursor >= data_.size()) malformed("missing count integer", cursor);
    std::uint8_t m = data_[cursor];
    if ((m >> 4) != 0x1) malformed("count is not an integer object", cursor);
    std::size_t width = std::size_t{1} << (m & 0xF);
    if (width > 8) malformed("count integer too wide", cursor);
    std::uint64_t count = read_be(cursor + 1, width);
    cursor += 1 + width;
    return count;
  }

  void require_bytes(std::size_t pos, std::uint64_t count, std::uint64_t unit) const {
    if (pos > table_offset_ || (unit != 0 && count > (table_offset_ - pos) / unit)) {
      malformed("object body overruns object area", pos);
    }
  }

  PlistValue read_object(std::uint64_t index, std::size_t depth) {
    if (depth > kMaxDepth) malformed("nesting too deep", object_offset(index));
    // Shared references make the decoded tree larger than the file; cap it.
    if (++decoded_ > kMaxDecodedObjects) malformed("object graph too large", object_offset(index));
    const std::size_t pos = object_offset(index);
    const std::uint8_t marker = data_[pos];
    const std::uint8_t type = marker >> 4;
    const std::uint8_t nibble = marker & 0xF;
    std::size_t cursor = pos + 1;

    switch (type) {
      case 0x0:
        if (marker == 0x08) return PlistValue{false};
        if (marker == 0x09) return PlistValue{true};
        if (marker == 0x00) unsupported("null", pos);
        if (marker == 0x0F) unsupported("fill", pos);
        unsupported("singleton 0x" + hex_byte(marker), pos);
      case 0x1: {
        if (nibble > 4) malformed("integer width out of range", pos);
        const std::size_t width = std::size_t{1} << nibble;
        require_bytes(cursor, width, 1);
        PlistInteger out;
        if (width == 16) {
          std::uint64_t hi = read_be(cursor, 8);
          std::uint64_t lo = read_be(cursor + 8, 8);
          if (hi == 0) {
            out.magnitude = lo;
          } else if (hi == ~std::uint64_t{0} && (lo >> 63)) {
            out.negative = true;
            out.magnitude = ~lo + 1;
          } else {
            malformed("integer exceeds 64 bits", pos);
          }
        } else {
          std::uint64_t raw = read_be(cursor, width);
          if (width == 8 && (raw >> 63)) {
            out.negative = true;
            out.magnitude = ~raw + 1;
          } else {
            out.magnitude = raw;
          }
        }
        return PlistValue{out};
      }
      case 0x2: {
        if (nibble == 2) {
          require_bytes(cursor, 4, 1);
          auto bits = static_cast<std::uint32_t>(read_be(cursor, 4));
          float f;
          std::memcpy(&f, &bits, sizeof f);
          return PlistValue{static_cast<double>(f)};
        }
        if (nibble == 3) {
          require_bytes(cursor, 8, 1);
          std::uint64_t bits = read_be(cursor, 8);
          double d;
          std::memcpy(&d, &bits, sizeof d);
          return PlistValue{d};
        }
        malformed("real width out of range", pos);
      }
      case 0x3:
        unsupported("date", pos);
      case 0x4: {
        std::uint64_t n = read_count(pos, nibble, cursor);
        require_bytes(cursor, n, 1);
        PlistData d;
        d.bytes.assign(data_.begin() + static_cast<std::ptrdiff_t>(cursor),
                       data_.begin() + static_cast<std::ptrdiff_t>(cursor + n));
        return PlistValue{std::move(d)};
      }
      case 0x5: {
        std::uint64_t n = read_count(pos, nibble, cursor);
        require_bytes(cursor, n, 1);
        return PlistValue{std::string(reinterpret_cast<const char*>(data_.data() + cursor), static_cast<std::size_t>(n))};
      }
      case 0x6: {
        std::uint64_t n = read_count(pos, nibble, cursor);
        require_bytes(cursor, n, 2);
        return PlistValue{decode_utf16be(cursor, static_cast<std::size_t>(n))};
      }
      case 0x8:
        unsupported("uid", pos);
      case 0xA: {
        std::uint64_t n = read_count(pos, nibble, cursor);
        require_bytes(cursor, n, ref_size_);
        enter(index, pos);
        PlistArray arr;
        arr.reserve(static_cast<std::size_t>(n));
        for (std::uint64_t i = 0; i < n; ++i) {
          arr.push_back(read_object(read_be(cursor + i * ref_size_, ref_size_), depth + 1));
        }
        leave(index);
        return PlistValue{std::move(arr)};
      }
      case 0xC:
        unsupported("set", pos);
      case 0xD: {
        std::uint64_t n = read_count(pos, nibble, cursor);
        if (n > std::numeric_limits<std::uint64_t>::max() / 2) malformed("dictionary size overflow", pos);
        require_bytes(cursor, n * 2, ref_size_);
        enter(index, pos);
        PlistDict dict;
        for (std::uint64_t i = 0; i < n; ++i) {
          std::uint64_t key_ref = read_be(cursor + i * ref_size_, ref_size_);
          std::uint64_t val_ref = read_be(cursor + (n + i) * ref_size_, ref_size_);
          PlistValue key = read_object(key_ref, depth + 1);
          auto* key_text = std::get_if<std::string>(&key.value);
          if (!key_text) malformed("dictionary key is not a string", object_offset(key_ref));
          dict.insert_or_assign(std::move(*key_text), read_object(val_ref, depth + 1));
        }
        leave(index);
        return PlistValue{std::move(dict)};
      }
      default:
        unsupported("marker 0x" + hex_byte(marker), pos);
    }
  }

  std::string decode_utf16be(std::size_t pos, std::size_t units) const {
    std::string out;
    out.reserve(units);
    for (std::size_t i = 0; i < units; ++i) {
      std::uint32_t u = static_cast<std::uint32_t>(read_be(pos + 2 * i, 2));
      if (u >= 0xD800 && u <= 0xDBFF && i + 1 < units) {
        std::uint32_t lo = static_cast<std::uint32_t>(read_be(pos + 2 * (i + 1), 2));
        if (lo >= 0xDC00 && lo <= 0xDFFF) {
          append_utf8(out, 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00));
          ++i;
          continue;
        }
      }
      if (u >= 0xD800 && u <= 0xDFFF) u = 0xFFFD;
      append_utf8(out, u);
    }
    return out;
  }

  void enter(std::uint64_t index, std::size_t pos) {
    if (in_progress_[static_cast<std::size_t>(index)]) malformed("object reference cycle", pos);
    in_progress_[static_cast<std::size_t>(index)] = true;
  }
  void leave(std::uint64_t index) { in_progress_[static_cast<std::size_t>(index)] = false; }

  static std::string hex_byte(std::uint8_t b) {
    static constexpr char kDigits[] = "0123456789abcdef";
    return {kDigits[b >> 4], kDigits[b & 0xF]};
  }

  std::span<const std::uint8_t> data_;
  std::size_t offset_size_ = 0;
  std::size_t ref_size_ = 0;
  std::uint64_t object_count_ = 0;
  std::uint64_t table_offset_ = 0;
  std::vector<bool> in_progress_;
  std::size_t decoded_ = 0;
};

// ---------------------------------------------------------------------------
// XML

class XmlReader {
 public:
  explicit XmlReader(std::string_view text) : s_(text) {}

  PlistValue read() {
    if (s_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    skip_misc();
    if (peek_tag_name() == "plist") {
      Tag open = read_open_tag();
      if (open.self_closing) malformed("empty plist element", open.offset);
      skip_misc();
      PlistValue v = read_value(0);
      skip_misc();
      expect_close("plist");
      skip_misc();
      if (pos_ != s_.size()) malformed("trailing content after plist", pos_);
      return v;
    }
    PlistValue v = read_value(0);
    skip_misc();
    if (pos_ != s_.size()) malformed("trailing content after root value", pos_);
    return v;
  }

 private:
  struct Tag {
    std::string name;
    bool self_closing = false;
    std::size_t offset = 0;
  };

  bool at(std::string_view lit) const { return s_.substr(pos_, lit.size()) == lit; }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_until(std::string_view terminator, std::size_t start) {
    std::size_t end = s_.find(terminator, pos_);
    if (end == std::string_view::npos) malformed("unterminated markup", start);
    pos_ = end + terminator.size();
  }

  // Whitespace, comments, processing instructions and the DOCTYPE.
  void skip_misc() {
    while (true) {
      skip_ws();
      std::size_t start = pos_;
      if (at("<?")) {
        skip_until("?>", start);
      } else if (at("<!--")) {
        skip_until("-->", start);
      } else if (at("<!DOCTYPE")) {
        skip_doctype(start);
      } else {
        return;
      }
    }
  }

  void skip_doctype(std::size_t start) {
    int bracket = 0;
    for (; pos_ < s_.size(); ++pos_) {
      char c = s_[pos_];
      if (c == '[') ++bracket;
      if (c == ']') --bracket;
      if (c == '>' && bracket <= 0) {
        ++pos_;
        return;
      }
    }
    malformed("unterminated DOCTYPE", start);
  }

  std::string_view peek_tag_name() const {
    if (pos_ >= s_.size() || s_[pos_] != '<') return {};
    std::size_t i = pos_ + 1;
    std::size_t start = i;
    while (i < s_.size() && !is_space(s_[i]) && s_[i] != '>' && s_[i] != '/') ++i;
    return s_.substr(start, i - start);
  }

  Tag read_open_tag() {
    Tag tag;
    tag.offset = pos_;
    if (pos_ >= s_.size() || s_[pos_] != '<') malformed("expected element", pos_);
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '>' && s_[pos_] != '/') ++pos_;
    tag.name = std::string(s_.substr(start, pos_ - start));
    if (tag.name.empty()) malformed("empty element name", tag.offset);
    // Attributes are skipped; quoted values may contain '>'.
    char quote = 0;
    for (; pos_ < s_.size(); ++pos_) {
      char c = s_[pos_];
      if (quote) {
        if (c == quote) quote = 0;
        continue;
      }
      if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        tag.self_closing = pos_ > start && s_[pos_ - 1] == '/';
        ++pos_;
        return tag;
      }
    }
    malformed("unterminated start tag", tag.offset);
  }

  void expect_close(std::string_view name) {
    std::size_t start = pos_;
    if (!at("</")) malformed("expected </" + std::string(name) + ">", start);
    pos_ += 2;
    if (s_.substr(pos_, name.size()) != name) malformed("mismatched closing tag", start);
    pos_ += name.size();
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '>') malformed("malformed closing tag", start);
    ++pos_;
  }

  // Character data up to the next '<' that does not open a CDATA section or
  // comment, with entities decoded.
  std::string read_text() {
    std::string out;
    while (pos_ < s_.size()) {
      if (at("<![CDATA[")) {
        std::size_t start = pos_;
        std::size_t end = s_.find("]]>", pos_ + 9);
        if (end == std::string_view::npos) malformed("unterminated CDATA", start);
        out.append(s_.substr(pos_ + 9, end - pos_ - 9));
        pos_ = end + 3;
        continue;
      }
      if (at("<!--")) {
        skip_until("-->", pos_);
        continue;
      }
      char c = s_[pos_];
      if (c == '<') break;
      if (c == '&') {
        decode_entity(out);
        continue;
      }
      out += c;
      ++pos_;
    }
    return out;
  }

  void decode_entity(std::string& out) {
    std::size_t start = pos_;
    std::size_t semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 12) malformed("unterminated entity", start);
    std::string_view name = s_.substr(pos_ + 1, semi - pos_ - 1);
    pos_ = semi + 1;
    if (name == "amp") out += '&';
    else if (name == "lt") out += '<';
    else if (name == "gt") out += '>';
    else if (name == "quot") out += '"';
    else if (name == "apos") out += '\'';
    else if (name.size() > 1 && name[0] == '#') {
      std::uint32_t cp = 0;
      std::from_chars_result r{};
      if (name[1] == 'x' || name[1] == 'X') {
        r = std::from_chars(name.data() + 2, name.data() + name.size(), cp, 16);
      } else {
        r = std::from_chars(name.data() + 1, name.data() + name.size(), cp, 10);
      }
      if (r.ec != std::errc{} || r.ptr != name.data() + name.size() || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        malformed("bad character reference", start);
      }
      append_utf8(out, cp);
    } else {
      malformed("unknown entity", start);
    }
  }

  std::string read_leaf(const Tag& tag) {
    if (tag.self_closing) return {};
    std::string text = read_text();
    expect_close(tag.name);
    return text;
  }

  PlistValue read_value(std::size_t depth) {
    if (depth > kMaxDepth) malformed("nesting too deep", pos_);
    skip_misc();
    Tag tag = read_open_tag();
    const std::string& n = tag.name;
    if (n == "string") return PlistValue{read_leaf(tag)};
    if (n == "true" || n == "false") {
      if (!tag.self_closing) {
        skip_ws();
        expect_close(n);
      }
      return PlistValue{n == "true"};
    }
    if (n == "integer") return PlistValue{parse_integer(read_leaf(tag), tag.offset)};
    if (n == "real") return PlistValue{parse_real(read_leaf(tag), tag.offset)};
    if (n == "data") return PlistValue{decode_base64(read_leaf(tag), tag.offset)};
    if (n == "array") {
      PlistArray arr;
      if (tag.self_closing) return PlistValue{std::move(arr)};
      while (true) {
        skip_misc();
        if (at("</")) break;
        arr.push_back(read_value(depth + 1));
      }
      expect_close("array");
      return PlistValue{std::move(arr)};
    }
    if (n == "dict") {
      PlistDict dict;
      if (tag.self_closing) return PlistValue{std::move(dict)};
      while (true) {
        skip_misc();
        if (at("</")) break;
        Tag key_tag = read_open_tag();
        if (key_tag.name != "key") malformed("expected <key> in dict", key_tag.offset);
        std::string key = read_leaf(key_tag);
        skip_misc();
        if (at("</")) malformed("dict key without value", pos_);
        dict.insert_or_assign(std::move(key), read_value(depth + 1));
      }
      expect_close("dict");
      return PlistValue{std::move(dict)};
    }
    if (n == "date") unsupported("date", tag.offset);
    unsupported(n, tag.offset);
  }

  static PlistInteger parse_integer(std::string_view text, std::size_t offset) {
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    PlistInteger out;
    if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
      out.negative = text[0] == '-';
      text.remove_prefix(1);
    }
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
      base = 16;
      text.remove_prefix(2);
    }
    auto r = std::from_chars(text.data(), text.data() + text.size(), out.magnitude, base);
    if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
      malformed("invalid integer", offset);
    }
    if (out.negative && out.magnitude > (std::uint64_t{1} << 63)) malformed("integer out of range", offset);
    if (out.magnitude == 0) out.negative = false;
    return out;
  }

  static double parse_real(std::string_view text, std::size_t offset) {
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    std::string_view digits = text;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    double v = 0;
    auto r = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (digits.empty() || r.ec != std::errc{} || r.ptr != digits.data() + digits.size()) {
      malformed("invalid real", offset);
    }
    return v;
  }

  static PlistData decode_base64(std::string_view text, std::size_t offset) {
    PlistData out;
    std::uint32_t acc = 0;
    int bits = 0;
    bool padding = false;
    for (char c : text) {
      if (is_space(c)) continue;
      int v;
      if (c >= 'A' && c <= 'Z') v = c - 'A';
      else if (c >= 'a' && c <= 'z') v = c - 'a' + 26;
      else if (c >= '0' && c <= '9') v = c - '0' + 52;
      else if (c == '+') v = 62;
      else if (c == '/') v = 63;
      else if (c == '=') {
        padding = true;
        continue;
      } else {
        malformed("invalid base64 data", offset);
      }
      if (padding) malformed("base64 data after padding", offset);
      acc = (acc << 6) | static_cast<std::uint32_t>(v);
      bits += 6;
      if (bits >= 8) {
        bits -= 8;
        out.bytes.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
      }
    }
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string PlistInteger::to_string() const {
  return (negative ? "-" : "") + std::to_string(magnitude);
}

bool PlistValue::is_scalar() const {
  return !std::holds_alternative<PlistArray>(value) && !std::holds_alternative<PlistDict>(value);
}

std::string PlistValue::to_display_string() const {
  if (auto* s = std::get_if<std::string>(&value)) return *s;
  if (auto* i = std::get_if<PlistInteger>(&value)) return i->to_string();
  if (auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  if (auto* d = std::get_if<double>(&value)) return format_real(*d);
  if (auto* data = std::get_if<PlistData>(&value)) return "<data:" + std::to_string(data->bytes.size()) + " bytes>";
  if (std::holds_alternative<PlistArray>(value)) return "<array>";
  return "<dict>";
}

bool operator==(const PlistValue& a, const PlistValue& b) {
  if (a.value.index() != b.value.index()) return false;
  if (auto* x = std::get_if<double>(&a.value)) {
    double y = std::get<double>(b.value);
    return *x == y || (std::isnan(*x) && std::isnan(y));
  }
  return a.value == b.value;
}

PlistValue parse_plist_value(std::span<const std::uint8_t> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (text.substr(0, 6) == "bplist") {
    if (text.substr(0, 8) != "bplist00") {
      unsupported("binary plist version '" + std::string(text.substr(6, 2)) + "'", 6);
    }
    return BinaryReader(bytes).read();
  }
  std::size_t i = text.substr(0, 3) == "\xEF\xBB\xBF" ? 3 : 0;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r' || text[i] == '\n')) ++i;
  if (i >= text.size() || text[i] != '<') malformed("neither bplist00 magic nor XML", 0);
  return XmlReader(text).read();
}

std::map<std::string, std::string> parse_plist(std::span<const std::uint8_t> bytes) {
  PlistValue root = parse_plist_value(bytes);
  auto* dict = std::get_if<PlistDict>(&root.value);
  if (!dict) malformed("top-level object is not a dictionary", 0);
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : *dict) {
    if (value.is_scalar()) out.emplace(key, value.to_display_string());
  }
  return out;
}

std::map<std::string, std::string> parse_plist(std::string_view bytes) {
  return parse_plist(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

}  // namespace chainaudit
