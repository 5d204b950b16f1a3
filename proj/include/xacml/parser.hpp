#pragma once

#include "xacml/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace xacml {

struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;      // first column, 1-based
  int end_column = 1;  // one past the last column

  std::string to_string() const;
};

class ParseError : public Error {
 public:
  ParseError(SourceSpan span, std::string message, std::vector<std::string> expected = {});

  const SourceSpan& span() const { return span_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  SourceSpan span_;
  std::string message_;
  std::vector<std::string> expected_;
};

struct ParsedComponent {
  Component component;
  SourceSpan span;
};

// Policy files:
//   policyset ps1 = [null, <p1, p2>, po]
//   policy p1 = [target((subject(doctor) | subject(nurse)), (action(read))), <r1>, fa]
//   rule r1 = [permit, null, cond(patient_id(X) and patient_record_id(X))]
std::vector<ParsedComponent> parse_policy_file(std::string_view text,
                                               std::string_view file = "<policies>");

/// Convenience: parse and build with domain checks.
PolicyStore load_store(std::string_view text, const AttributeDomains& domains,
                       StoreOptions options = {}, std::string_view file = "<policies>");

// Domain files:
//   subjects: doctor, nurse
//   actions: read
//   relation patient_id: (5), (7)
AttributeDomains parse_domains(std::string_view text, std::string_view file = "<domains>");

/// Request files: { subject(doctor), action(read), on_shift(alice) }.
/// Non-category facts are accepted only when `domains` declares a relation of
/// that name.
Request parse_request(std::string_view text, const AttributeDomains* domains = nullptr,
                      std::string_view file = "<request>");

std::string serialize(const PolicyStore& store);
std::string serialize(const Component& component);
std::string serialize(const Request& request);
std::string serialize(const AttributeDomains& domains);
std::string serialize(const Target& target);
std::string serialize(const Condition& condition);

}  // namespace xacml
