#include "coevo/rng.hpp"

#include <limits>
#include <sstream>

#include "coevo/error.hpp"
#include "coevo/json_util.hpp"

namespace coevo {

std::uint64_t Rng::below(std::uint64_t bound) {
    // Reject the incomplete final block so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

int Rng::uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(static_cast<long long>(hi) - lo) + 1;
    return lo + static_cast<int>(below(span));
}

std::string Rng::state_hex() const {
    std::ostringstream out;
    out << engine_;
    return hex_encode(out.str());
}

Rng Rng::from_state_hex(const std::string& hex) {
    Rng rng;
    std::istringstream in(hex_decode(hex));
    in >> rng.engine_;
    if (in.fail()) throw Error(ErrorCode::ParseError, "malformed rng_state");
    return rng;
}

}  // namespace coevo
