#include <lapnet/common.hpp>

namespace lapnet {

ParseError::ParseError(const std::string& detail, std::size_t line, const std::string& source)
    : Error((source.empty() ? "" : source + ": ") + (line > 0 ? "line " + std::to_string(line) + ": " : "") + detail)
    , line_(line)
    , detail_(detail)
{}

ConvergenceError::ConvergenceError(const std::string& what, double residual)
    : Error(what + " (residual " + std::to_string(residual) + ")")
    , residual_(residual)
{}

void Fnv1a::update(const void* data, std::size_t size)
{
    const auto* bytes = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        state_ ^= bytes[i];
        state_ *= 0x100000001b3ULL;
    }
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes)
{
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    return h.digest();
}

} // namespace lapnet
