#include "ofsim/waveform.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ofsim {

double DualPolWaveform::power_w() const { return mean_power(x) + mean_power(y); }

void DualPolWaveform::scale(double amplitude)
{
    for (auto& s : x) s *= amplitude;
    for (auto& s : y) s *= amplitude;
}

void DualPolWaveform::set_power_mw(double p_mw)
{
    const double current = power_mw();
    if (!(current > 0.0)) throw Error("set_power_mw: waveform has zero power");
    scale(std::sqrt(p_mw / current));
}

void DualPolWaveform::validate() const
{
    if (x.size() != y.size()) throw Error("waveform: polarizations differ in length");
    if (!(sample_rate_hz > 0.0)) throw Error("waveform: sample rate must be positive");
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "FLW1 I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'F', 'L', 'W', '1'};

template <typename T>
void put(std::ostream& os, T value)
{
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is)
{
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw Error("FLW1: truncated header");
    return value;
}

void put_samples(std::ostream& os, const CVec& v)
{
    std::vector<float> buf(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        buf[2 * i] = static_cast<float>(v[i].real());
        buf[2 * i + 1] = static_cast<float>(v[i].imag());
    }
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

CVec get_samples(std::istream& is, std::uint64_t n)
{
    std::vector<float> buf(2 * n);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw Error("FLW1: truncated sample block");
    CVec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Complex(buf[2 * i], buf[2 * i + 1]);
    return v;
}

}  // namespace

void write_flw1(std::ostream& os, const DualPolWaveform& w)
{
    w.validate();
    os.write(kMagic.data(), kMagic.size());
    put<double>(os, w.sample_rate_hz);
    put<double>(os, w.center_freq_hz);
    put<std::uint64_t>(os, w.x.size());
    put_samples(os, w.x);
    put_samples(os, w.y);
    if (!os) throw Error("FLW1: write failed");
}

DualPolWaveform read_flw1(std::istream& is)
{
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw Error("FLW1: bad magic");
    DualPolWaveform w;
    w.sample_rate_hz = get<double>(is);
    w.center_freq_hz = get<double>(is);
    const auto n = get<std::uint64_t>(is);
    w.x = get_samples(is, n);
    w.y = get_samples(is, n);
    return w;
}

void save_flw1(const std::string& path, const DualPolWaveform& w)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("FLW1: cannot open " + path);
    write_flw1(os, w);
}

DualPolWaveform load_flw1(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("FLW1: cannot open " + path);
    return read_flw1(is);
}

}  // namespace ofsim
