#include "vcdp/parallel.hpp"

#include <cstdlib>
#include <string>

#include "vcdp/error.hpp"

namespace vcdp {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("VCDP_WORKERS"); env != nullptr && *env != '\0') {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::kInvalidConfig, std::string("VCDP_WORKERS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

}  // namespace vcdp
