#include "cfs/rng.hpp"

#include <sstream>

#include "cfs/error.hpp"

namespace cfs {

std::string Rng::state() const {
  std::ostringstream os;
  os << seed_ << ' ' << engine_;
  return os.str();
}

void Rng::restore(const std::string& serialized) {
  std::istringstream is(serialized);
  is >> seed_ >> engine_;
  if (!is) throw FormatError("rng: malformed engine state");
}

}  // namespace cfs
