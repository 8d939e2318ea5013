#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "tsns/field.hpp"

namespace tsns {

/// Results are written once, atomically: contents land in a sibling temp file
/// that is renamed over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

namespace detail {

template <typename T>
void append_le(std::string& out, T value) {
    // Little-endian on-disk layout; this targets little-endian hosts.
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T read_le(const std::string& in, std::size_t& off) {
    if (off + sizeof(T) > in.size()) throw IoError("checkpoint truncated");
    T value;
    std::memcpy(&value, in.data() + off, sizeof(T));
    off += sizeof(T);
    return value;
}

}  // namespace detail

constexpr std::uint32_t kCheckpointVersion = 1;
/// Normalization flag: coefficients are plain Fourier amplitudes, so the
/// H norm is (sum_j |u_j|^2)^{1/2} (physical L^2 divided by L^{3/2}).
constexpr std::uint32_t kCheckpointFlagsUnitCoeff = 1;

/// Header: magic "TSNS", version u32, flags u32, L f64, N u32, count u64;
/// then per stored mode three i32 lattice indices and six f64 (re/im per
/// component). Little-endian throughout.
inline std::string encode_checkpoint(const SpectralField& u) {
    std::string out;
    const auto& lat = u.lattice();
    out.append("TSNS", 4);
    detail::append_le<std::uint32_t>(out, kCheckpointVersion);
    detail::append_le<std::uint32_t>(out, kCheckpointFlagsUnitCoeff);
    detail::append_le<double>(out, lat.length());
    detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(lat.truncation()));
    detail::append_le<std::uint64_t>(out, static_cast<std::uint64_t>(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Mode& j = lat.mode(i);
        for (int d = 0; d < 3; ++d) detail::append_le<std::int32_t>(out, j[d]);
        for (int d = 0; d < 3; ++d) {
            detail::append_le<double>(out, u[i][d].real());
            detail::append_le<double>(out, u[i][d].imag());
        }
    }
    return out;
}

inline void save_checkpoint(const SpectralField& u, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(u));
}

inline SpectralField decode_checkpoint(const std::string& bytes,
                                       std::shared_ptr<const Lattice> lattice = nullptr) {
    std::size_t off = 0;
    if (bytes.size() < 4 || bytes.compare(0, 4, "TSNS") != 0)
        throw IoError("not a TSNS checkpoint (bad magic)");
    off = 4;
    const auto version = detail::read_le<std::uint32_t>(bytes, off);
    if (version != kCheckpointVersion)
        throw IoError("checkpoint version mismatch: file has " + std::to_string(version) +
                      ", reader expects " + std::to_string(kCheckpointVersion));
    const auto flags = detail::read_le<std::uint32_t>(bytes, off);
    if (flags != kCheckpointFlagsUnitCoeff)
        throw IoError("checkpoint declares an unsupported normalization flag " +
                      std::to_string(flags));
    const double length = detail::read_le<double>(bytes, off);
    const auto trunc = detail::read_le<std::uint32_t>(bytes, off);
    const auto count = detail::read_le<std::uint64_t>(bytes, off);

    if (!lattice) {
        lattice = std::make_shared<Lattice>(length, static_cast<int>(trunc));
    } else if (lattice->length() != length ||
               lattice->truncation() != static_cast<int>(trunc)) {
        throw IoError("checkpoint lattice (L, N) does not match the requested lattice");
    }
    if (count != lattice->mode_count())
        throw IoError("checkpoint mode count " + std::to_string(count) +
                      " does not match the lattice");

    SpectralField u(lattice);
    std::vector<std::uint8_t> seen(u.size(), 0);
    for (std::uint64_t k = 0; k < count; ++k) {
        Mode j;
        for (int d = 0; d < 3; ++d) j[d] = detail::read_le<std::int32_t>(bytes, off);
        CoeffVec c;
        for (int d = 0; d < 3; ++d) {
            const double re = detail::read_le<double>(bytes, off);
            const double im = detail::read_le<double>(bytes, off);
            c[d] = Complex(re, im);
        }
        const std::string name = "(" + std::to_string(j[0]) + "," + std::to_string(j[1]) + "," +
                                 std::to_string(j[2]) + ")";
        if (j[0] == 0 && j[1] == 0 && j[2] == 0)
            throw IoError("checkpoint invariant violation: nonzero-mean mode " + name);
        if (!lattice->in_range(j) || !Lattice::is_canonical(j))
            throw IoError("checkpoint invariant violation: non-canonical mode " + name);
        const int p = lattice->pair_of(j);
        if (seen[static_cast<std::size_t>(p)])
            throw IoError("checkpoint invariant violation: duplicate mode " + name);
        seen[static_cast<std::size_t>(p)] = 1;
        u[static_cast<std::size_t>(p)] = c;
    }
    if (off != bytes.size()) throw IoError("checkpoint has trailing bytes");
    return u;
}

inline SpectralField load_checkpoint(const std::filesystem::path& path,
                                     std::shared_ptr<const Lattice> lattice = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes, std::move(lattice));
}

}  // namespace tsns
