// CMCF field files: ASCII magic + header, little-endian float64 payload.
//
//   CMCF1\n
//   nx ny re(omega1) im(omega1) re(omega2) im(omega2) m\n
//   nx*ny doubles, row-major (k outer, j inner)
//
// Lattice reals are printed with 17 significant digits so save/load
// round-trips bit-exactly on the payload and value-exactly on the header.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cmcindex/lattice.hpp"

namespace cmcindex {

struct FieldIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
static_assert(sizeof(double) == 8, "CMCF requires 64-bit doubles");

inline bool host_is_little_endian() {
    const uint16_t probe = 1;
    uint8_t b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

inline void byteswap64(char* p) {
    std::swap(p[0], p[7]);
    std::swap(p[1], p[6]);
    std::swap(p[2], p[5]);
    std::swap(p[3], p[4]);
}
}  // namespace detail

inline void save_cmcf(const ScalarField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FieldIoError("save_cmcf: cannot open " + path);
    const auto& g = f.grid;
    char header[256];
    std::snprintf(header, sizeof(header),
                  "CMCF1\n%d %d %.17g %.17g %.17g %.17g %d\n", g.nx, g.ny,
                  g.lattice.omega1.real(), g.lattice.omega1.imag(),
                  g.lattice.omega2.real(), g.lattice.omega2.imag(),
                  g.lattice.m);
    out << header;
    if (detail::host_is_little_endian()) {
        out.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(f.values.size() * 8));
    } else {
        for (double v : f.values) {
            char buf[8];
            std::memcpy(buf, &v, 8);
            detail::byteswap64(buf);
            out.write(buf, 8);
        }
    }
    if (!out) throw FieldIoError("save_cmcf: write failed for " + path);
}

inline ScalarField load_cmcf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FieldIoError("load_cmcf: cannot open " + path);
    std::string magic, header;
    if (!std::getline(in, magic) || magic != "CMCF1")
        throw FieldIoError("load_cmcf: bad magic in " + path);
    if (!std::getline(in, header))
        throw FieldIoError("load_cmcf: missing header in " + path);
    std::istringstream hs(header);
    int nx, ny, m;
    double w1r, w1i, w2r, w2i;
    if (!(hs >> nx >> ny >> w1r >> w1i >> w2r >> w2i >> m))
        throw FieldIoError("load_cmcf: malformed header in " + path);
    std::string trailing;
    if (hs >> trailing)
        throw FieldIoError("load_cmcf: trailing header tokens in " + path);
    Grid grid;
    try {
        grid = Grid(TorusLattice(complexd(w1r, w1i), complexd(w2r, w2i), m),
                    nx, ny);
    } catch (const std::invalid_argument& e) {
        throw FieldIoError(std::string("load_cmcf: ") + e.what());
    }
    std::vector<double> values(grid.size());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * 8));
    if (static_cast<size_t>(in.gcount()) != values.size() * 8)
        throw FieldIoError("load_cmcf: payload size mismatch in " + path);
    char extra;
    if (in.read(&extra, 1))
        throw FieldIoError("load_cmcf: payload size mismatch in " + path);
    if (!detail::host_is_little_endian())
        for (double& v : values) detail::byteswap64(reinterpret_cast<char*>(&v));
    for (double v : values)
        if (!std::isfinite(v))
            throw FieldIoError("load_cmcf: non-finite payload in " + path);
    return ScalarField(grid, std::move(values));
}

}  // namespace cmcindex
