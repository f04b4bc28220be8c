#include "rimamba/errors.hpp"

namespace rimamba {

void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string msg = context + ": " + e.what();
  if (dynamic_cast<const DegenerateError*>(&e)) throw DegenerateError(msg);
  if (dynamic_cast<const SizeError*>(&e)) throw SizeError(msg);
  if (dynamic_cast<const FormatError*>(&e)) throw FormatError(msg);
  if (dynamic_cast<const IoError*>(&e)) throw IoError(msg);
  if (dynamic_cast<const ArgumentError*>(&e)) throw ArgumentError(msg);
  throw Error(msg);
}

}  // namespace rimamba
