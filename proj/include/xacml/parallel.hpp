#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

namespace xacml {

enum class Execution { serial, parallel };

std::string_view to_string(Execution e);

/// Calls body(i) for every i in [0, n). The parallel form splits the range
/// across OpenMP threads; the first exception raised by any call is rethrown
/// once the loop has finished.
void for_each_index(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body);

/// Worker count used by the parallel form.
int worker_count();

}  // namespace xacml
