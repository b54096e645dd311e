#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpssv {

/// Location of a construct in some input text. Lines and columns are 1-based; columns
/// count bytes.
struct SourceSpan {
  std::shared_ptr<const std::string> file;
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::uint32_t length = 0;

  std::string file_name() const { return file ? *file : std::string("<input>"); }
  std::string str() const;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceSpan span;
  /// State or transition identifier the diagnostic is about, if any.
  std::string subject;

  std::string str() const;
};

/// Collected findings of a validation pass. Validators never throw; they append here.
struct ValidationReport {
  std::vector<Diagnostic> items;

  void error(std::string message, std::string subject = {}, SourceSpan span = {});
  void warning(std::string message, std::string subject = {}, SourceSpan span = {});
  void append(const ValidationReport& other);

  bool ok() const { return error_count() == 0; }
  std::size_t error_count() const;
  std::size_t warning_count() const;
  bool has_error_containing(std::string_view text) const;
  bool has_warning_containing(std::string_view text) const;
};

std::ostream& operator<<(std::ostream& os, const ValidationReport& report);

/// Thrown by parsers. Carries one or more diagnostics; the first is the primary one.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  ParseError(std::string message, SourceSpan span);

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  const SourceSpan& span() const { return diagnostics_.front().span; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace cpssv
