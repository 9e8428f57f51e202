#ifndef HEP2_ACCEPTANCE_HPP
#define HEP2_ACCEPTANCE_HPP

#include <iosfwd>
#include <string>

namespace hep2 {

/// Run the ten release gates and print one PASS/FAIL line per gate. The last
/// gate needs a real dataset directory and is reported as SKIP when
/// `dataset_root` is empty or unreadable. Returns true when no gate failed.
bool run_acceptance(std::ostream& os, const std::string& dataset_root = "");

} // namespace hep2

#endif
