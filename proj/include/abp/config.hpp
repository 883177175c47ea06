#ifndef ABP_CONFIG_HPP
#define ABP_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

namespace abp {

// Flat key=value text: one pair per line, '#' starts a comment, whitespace
// around keys and values is trimmed. Section structure lives in dotted key
// prefixes, not in syntax.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);
std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& kv);

bool kv_has(const KeyValues& kv, const std::string& key);
std::string kv_get(const KeyValues& kv, const std::string& key);
std::string kv_get_or(const KeyValues& kv, const std::string& key, const std::string& fallback);
int kv_get_int(const KeyValues& kv, const std::string& key, int fallback);
double kv_get_double(const KeyValues& kv, const std::string& key, double fallback);
std::uint64_t kv_get_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback);

// Exact text form for a double: survives a parse round trip bit for bit.
std::string format_double(double v);

// FNV-1a over a byte string; used for the reproducibility stanza.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(const std::string& text);

}  // namespace abp

#endif
