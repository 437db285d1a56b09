#include <array>
#include <cstring>
#include <istream>
#include <ostream>

#include "srnr/encoding.hpp"
#include "srnr/error.hpp"

namespace srnr {
namespace {

constexpr std::array<char, 8> kMagic{'S', 'R', 'N', 'R', 'S', 'P', 'K', '1'};

}  // namespace

void write_raster(std::ostream& out, const SpikeRaster& raster) {
    const nlohmann::json header{{"dt", raster.dt},
                                {"rows", raster.rows()},
                                {"steps", raster.steps()},
                                {"row_meaning", to_string(raster.row_meaning)}};
    const std::string text = header.dump();
    const auto len = static_cast<std::uint32_t>(text.size());
    const std::array<char, 4> len_le{static_cast<char>(len & 0xff),
                                     static_cast<char>((len >> 8) & 0xff),
                                     static_cast<char>((len >> 16) & 0xff),
                                     static_cast<char>((len >> 24) & 0xff)};
    out.write(kMagic.data(), kMagic.size());
    out.write(len_le.data(), len_le.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    const auto bits = raster.spikes.flat();
    std::string packed((bits.size() + 7) / 8, '\0');
    for (std::size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) packed[k / 8] = static_cast<char>(packed[k / 8] | (1u << (k % 8)));
    out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
    if (!out) throw Error(ErrorKind::runtime, "write_raster: stream failure");
}

SpikeRaster read_raster(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw DataError("read_raster: bad magic");
    std::array<unsigned char, 4> len_le{};
    in.read(reinterpret_cast<char*>(len_le.data()), len_le.size());
    if (!in) throw DataError("read_raster: truncated header length");
    const std::uint32_t len = len_le[0] | (len_le[1] << 8) | (len_le[2] << 16) |
                              (static_cast<std::uint32_t>(len_le[3]) << 24);
    std::string text(len, '\0');
    in.read(text.data(), len);
    if (!in) throw DataError("read_raster: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("read_raster: header is not JSON: ") + e.what());
    }
    SpikeRaster raster;
    try {
        raster.dt = header.at("dt").get<double>();
        raster.row_meaning = row_meaning_from_string(header.at("row_meaning").get<std::string>());
        raster.spikes = Matrix<std::uint8_t>(header.at("rows").get<std::size_t>(),
                                             header.at("steps").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("read_raster: malformed header: ") + e.what());
    }

    auto bits = raster.spikes.flat();
    std::string packed((bits.size() + 7) / 8, '\0');
    in.read(packed.data(), static_cast<std::streamsize>(packed.size()));
    if (!in) throw DataError("read_raster: truncated payload");
    for (std::size_t k = 0; k < bits.size(); ++k)
        bits[k] = (static_cast<unsigned char>(packed[k / 8]) >> (k % 8)) & 1u;
    return raster;
}

void write_raster_csv(std::ostream& out, const SpikeRaster& raster) {
    for (std::size_t r = 0; r < raster.rows(); ++r) {
        const auto row = raster.spikes.row(r);
        for (std::size_t t = 0; t < row.size(); ++t) out << (t ? "," : "") << int(row[t]);
        out << '\n';
    }
}

}  // namespace srnr
