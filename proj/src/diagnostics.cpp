#include "cpssv/diagnostics.hpp"

#include <algorithm>
#include <sstream>

namespace cpssv {

std::string SourceSpan::str() const {
  std::ostringstream os;
  os << file_name() << ":" << line << ":" << column;
  return os.str();
}

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << span.str() << ": " << (severity == Severity::Error ? "error" : "warning") << ": " << message;
  if (!subject.empty()) os << " [" << subject << "]";
  return os.str();
}

void ValidationReport::error(std::string message, std::string subject, SourceSpan span) {
  items.push_back({Severity::Error, std::move(message), std::move(span), std::move(subject)});
}

void ValidationReport::warning(std::string message, std::string subject, SourceSpan span) {
  items.push_back({Severity::Warning, std::move(message), std::move(span), std::move(subject)});
}

void ValidationReport::append(const ValidationReport& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(),
                                                [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const { return items.size() - error_count(); }

bool ValidationReport::has_error_containing(std::string_view text) const {
  return std::any_of(items.begin(), items.end(), [&](const Diagnostic& d) {
    return d.severity == Severity::Error && d.message.find(text) != std::string::npos;
  });
}

bool ValidationReport::has_warning_containing(std::string_view text) const {
  return std::any_of(items.begin(), items.end(), [&](const Diagnostic& d) {
    return d.severity == Severity::Warning && d.message.find(text) != std::string::npos;
  });
}

std::ostream& operator<<(std::ostream& os, const ValidationReport& report) {
  for (const auto& d : report.items) os << d.str() << "\n";
  return os;
}

namespace {
std::string first_message(const std::vector<Diagnostic>& ds) {
  return ds.empty() ? std::string("parse error") : ds.front().str();
}
}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(first_message(diagnostics)), diagnostics_(std::move(diagnostics)) {
  if (diagnostics_.empty()) diagnostics_.push_back({Severity::Error, "parse error", {}, {}});
}

ParseError::ParseError(std::string message, SourceSpan span)
    : ParseError(std::vector<Diagnostic>{{Severity::Error, std::move(message), std::move(span), {}}}) {}

}  // namespace cpssv
