#include "jess/errors.hpp"

namespace jess {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const InputError*>(&e)) return 2;
    if (dynamic_cast<const SafetyError*>(&e)) return 3;
    if (dynamic_cast<const DivergenceError*>(&e)) return 3;
    return 3;
}

} // namespace jess
