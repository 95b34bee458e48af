#pragma once

#include <string>
#include <string_view>

namespace chainaudit {

/// Longest matching public suffix of a lowercased host under the bundled
/// ICANN suffix list, honouring wildcard and exception rules. Unknown TLDs
/// fall back to the implicit `*` rule.
std::string public_suffix(std::string_view host);

/// Strips the local part of an email, lowercases, and reduces the host to
/// its registrable domain (public suffix plus one label).
/// Throws Error{NotADomain} or Error{PublicSuffixOnly}.
std::string registrable_domain(std::string_view host_or_email);

}  // namespace chainaudit
