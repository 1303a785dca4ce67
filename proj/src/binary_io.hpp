#pragma once

// Little-endian byte buffers shared by the checkpoint and feature-cache
// formats. Internal to the library.

#include <lapnet/common.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace lapnet::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
public:
    template <typename T>
    void put(const T& value)
    {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* data, std::size_t size)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + size);
    }
    void put_string(const std::string& s)
    {
        put<std::uint64_t>(s.size());
        put_bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Thrown by ByteReader when reading past the end.
class TruncatedError : public Error {
public:
    using Error::Error;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size)
        : data_(data)
        , size_(size)
    {}

    template <typename T>
    T get()
    {
        T value;
        get_bytes(&value, sizeof(T));
        return value;
    }
    void get_bytes(void* out, std::size_t size)
    {
        if (size > size_ - pos_) {
            throw TruncatedError("unexpected end of data");
        }
        std::memcpy(out, data_ + pos_, size);
        pos_ += size;
    }
    void skip(std::size_t size)
    {
        if (size > size_ - pos_) {
            throw TruncatedError("unexpected end of data");
        }
        pos_ += size;
    }
    std::string get_string()
    {
        const auto len = get<std::uint64_t>();
        if (len > size_ - pos_) {
            throw TruncatedError("string length exceeds data");
        }
        std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return s;
    }
    std::size_t remaining() const { return size_ - pos_; }
    std::size_t position() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace lapnet::detail
