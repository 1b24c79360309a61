#include "libra/io.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace libra {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(os, u);
}

float get_f32(std::istream& is) {
    const std::uint32_t u = get_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

void write_f32_block(std::ostream& os, const std::vector<double>& data) {
    if constexpr (std::endian::native == std::endian::little) {
        std::vector<float> buf(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) buf[i] = static_cast<float>(data[i]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * 4));
    } else {
        for (double v : data) put_f32(os, static_cast<float>(v));
    }
}

void read_f32_block(std::istream& is, std::vector<double>& data) {
    if constexpr (std::endian::native == std::endian::little) {
        std::vector<float> buf(data.size());
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * 4));
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = buf[i];
    } else {
        for (double& v : data) v = get_f32(is);
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0) {
        throw IoError("bad magic in " + path + " (expected " + magic + ")");
    }
}

void write_grid_raw(const std::string& path, GridKind kind, std::uint32_t d0, std::uint32_t d1,
                    std::uint32_t d2, std::uint32_t d3, const std::vector<double>& payload) {
    auto os = open_out(path);
    os.write("LBG1", 4);
    const unsigned char k = static_cast<unsigned char>(kind);
    os.write(reinterpret_cast<const char*>(&k), 1);
    put_u32(os, d0);
    put_u32(os, d1);
    put_u32(os, d2);
    put_u32(os, d3);
    write_f32_block(os, payload);
    if (!os) throw IoError("write failed: " + path);
}

struct GridHeader {
    GridKind kind;
    std::uint32_t dims[4];
};

GridHeader read_grid_header(std::istream& is, const std::string& path) {
    expect_magic(is, "LBG1", path);
    unsigned char k;
    is.read(reinterpret_cast<char*>(&k), 1);
    if (k > 1) throw IoError("unknown grid kind in " + path);
    GridHeader h;
    h.kind = static_cast<GridKind>(k);
    for (auto& d : h.dims) d = get_u32(is);
    if (!is) throw IoError("truncated grid header in " + path);
    return h;
}

}  // namespace

void write_grid(const std::string& path, const ChromaticGrid& g) {
    write_grid_raw(path, GridKind::Chromatic, kCoeffChannels, static_cast<std::uint32_t>(g.gc),
                   static_cast<std::uint32_t>(g.gh), static_cast<std::uint32_t>(g.gw), g.c);
}

void write_grid(const std::string& path, const TemporalGrid& g) {
    write_grid_raw(path, GridKind::Temporal, kCoeffChannels, static_cast<std::uint32_t>(g.t),
                   static_cast<std::uint32_t>(g.gh), static_cast<std::uint32_t>(g.gw), g.c);
}

GridKind peek_grid_kind(const std::string& path) {
    auto is = open_in(path);
    return read_grid_header(is, path).kind;
}

ChromaticGrid read_chromatic_grid(const std::string& path) {
    auto is = open_in(path);
    const GridHeader h = read_grid_header(is, path);
    if (h.kind != GridKind::Chromatic) throw IoError("not a chromatic grid: " + path);
    if (h.dims[0] != kCoeffChannels) throw IoError("unexpected channel count in " + path);
    ChromaticGrid g(static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2]),
                    static_cast<int>(h.dims[3]));
    read_f32_block(is, g.c);
    if (!is) throw IoError("truncated grid payload in " + path);
    return g;
}

TemporalGrid read_temporal_grid(const std::string& path) {
    auto is = open_in(path);
    const GridHeader h = read_grid_header(is, path);
    if (h.kind != GridKind::Temporal) throw IoError("not a temporal grid: " + path);
    if (h.dims[0] != kCoeffChannels) throw IoError("unexpected channel count in " + path);
    TemporalGrid g(static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2]),
                   static_cast<int>(h.dims[3]));
    read_f32_block(is, g.c);
    if (!is) throw IoError("truncated grid payload in " + path);
    return g;
}

void write_field(const std::string& path, const ScalarField& f) {
    auto os = open_out(path);
    os.write("LBF1", 4);
    const unsigned char ch = 1;
    os.write(reinterpret_cast<const char*>(&ch), 1);
    put_u32(os, static_cast<std::uint32_t>(f.height));
    put_u32(os, static_cast<std::uint32_t>(f.width));
    write_f32_block(os, f.v);
    if (!os) throw IoError("write failed: " + path);
}

void write_flow(const std::string& path, const FlowField& f) {
    auto os = open_out(path);
    os.write("LBF1", 4);
    const unsigned char ch = 2;
    os.write(reinterpret_cast<const char*>(&ch), 1);
    put_u32(os, static_cast<std::uint32_t>(f.height));
    put_u32(os, static_cast<std::uint32_t>(f.width));
    // channels interleaved last: (u, v) per pixel
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        put_f32(os, static_cast<float>(f.u[i]));
        put_f32(os, static_cast<float>(f.v[i]));
    }
    if (!os) throw IoError("write failed: " + path);
}

ScalarField read_field(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, "LBF1", path);
    unsigned char ch;
    is.read(reinterpret_cast<char*>(&ch), 1);
    if (ch != 1) throw IoError("expected 1-channel field in " + path);
    const int h = static_cast<int>(get_u32(is));
    const int w = static_cast<int>(get_u32(is));
    ScalarField f(h, w);
    read_f32_block(is, f.v);
    if (!is) throw IoError("truncated field payload in " + path);
    return f;
}

FlowField read_flow(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, "LBF1", path);
    unsigned char ch;
    is.read(reinterpret_cast<char*>(&ch), 1);
    if (ch != 2) throw IoError("expected 2-channel field in " + path);
    const int h = static_cast<int>(get_u32(is));
    const int w = static_cast<int>(get_u32(is));
    FlowField f(h, w);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u[i] = get_f32(is);
        f.v[i] = get_f32(is);
    }
    if (!is) throw IoError("truncated flow payload in " + path);
    return f;
}

// ---------------------------------------------------------------- PNG

namespace {

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace

Frame read_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open PNG: " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG decode error: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int color = png_get_color_type(ctx.png, ctx.info);
    int depth = png_get_bit_depth(ctx.png, ctx.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(ctx.png);
    }
    png_set_strip_alpha(ctx.png);
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(ctx.png);
    png_read_update_info(ctx.png, ctx.info);
    depth = png_get_bit_depth(ctx.png, ctx.info);

    Frame out(h, w);
    const std::size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<unsigned char> row(rowbytes);
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (int y = 0; y < h; ++y) {
        png_read_row(ctx.png, row.data(), nullptr);
        if (depth == 16) {
            const std::uint16_t* r16 = reinterpret_cast<const std::uint16_t*>(row.data());
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) out.at(c, y, x) = r16[3 * x + c] * scale;
            }
        } else {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) out.at(c, y, x) = row[3 * x + c] * scale;
            }
        }
    }
    png_read_end(ctx.png, nullptr);
    return out;
}

void write_png16(const std::string& path, const Frame& frame) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open PNG for writing: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG encode error: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(frame.width),
                 static_cast<png_uint_32>(frame.height), 16, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    if (std::endian::native == std::endian::little) png_set_swap(ctx.png);

    std::vector<std::uint16_t> row(static_cast<std::size_t>(frame.width) * 3);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = clamp01(frame.at(c, y, x));
                row[3 * static_cast<std::size_t>(x) + c] =
                    static_cast<std::uint16_t>(std::lround(v * 65535.0));
            }
        }
        png_write_row(ctx.png, reinterpret_cast<png_bytep>(row.data()));
    }
    png_write_end(ctx.png, nullptr);
}

// ---------------------------------------------------------------- manifest

Manifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto want_value = [&](auto& dst) {
            if (!(ls >> dst)) {
                throw IoError(path + ":" + std::to_string(lineno) + ": missing value for " + key);
            }
        };
        if (key == "beta") {
            want_value(m.beta);
        } else if (key == "a_inf") {
            m.a_inf.clear();
            double v;
            while (ls >> v) m.a_inf.push_back(v);
            if (m.a_inf.size() != 1 && m.a_inf.size() != 3) {
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": a_inf needs 1 or 3 values");
            }
        } else if (key == "fps") {
            want_value(m.fps);
        } else if (key == "flip_depth") {
            int v;
            want_value(v);
            m.flip_depth = v != 0;
        } else if (key == "lo_pct") {
            want_value(m.lo_pct);
        } else if (key == "hi_pct") {
            want_value(m.hi_pct);
        } else if (key == "blend") {
            want_value(m.blend);
        } else if (key == "gf_radius") {
            want_value(m.gf_radius);
        } else if (key == "gf_eps") {
            want_value(m.gf_eps);
        } else if (key == "clean" || key == "depth" || key == "flow" || key == "hazy" ||
                   key == "trans") {
            std::string p;
            want_value(p);
            const std::string full = resolve(p);
            if (key == "clean") m.clean.push_back(full);
            else if (key == "depth") m.depth.push_back(full);
            else if (key == "flow") m.flow.push_back(full);
            else if (key == "hazy") m.hazy.push_back(full);
            else m.trans.push_back(full);
        } else {
            throw IoError(path + ":" + std::to_string(lineno) + ": unknown manifest key " + key);
        }
    }
    return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open manifest for writing: " + path);
    os << "beta " << m.beta << "\n";
    os << "a_inf";
    for (double v : m.a_inf) os << " " << v;
    os << "\n";
    os << "fps " << m.fps << "\n";
    os << "flip_depth " << (m.flip_depth ? 1 : 0) << "\n";
    os << "lo_pct " << m.lo_pct << "\nhi_pct " << m.hi_pct << "\n";
    os << "blend " << m.blend << "\n";
    os << "gf_radius " << m.gf_radius << "\ngf_eps " << m.gf_eps << "\n";
    for (const auto& p : m.clean) os << "clean " << p << "\n";
    for (const auto& p : m.depth) os << "depth " << p << "\n";
    for (const auto& p : m.flow) os << "flow " << p << "\n";
    for (const auto& p : m.hazy) os << "hazy " << p << "\n";
    for (const auto& p : m.trans) os << "trans " << p << "\n";
    if (!os) throw IoError("manifest write failed: " + path);
}

// ---------------------------------------------------------------- configs

FitConfig read_fit_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open fit config: " + path);
    FitConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            // allow blank lines
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok) {
                throw IoError(path + ":" + std::to_string(lineno) + ": expected key=value");
            }
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "lambda_id") c.lambda_id = std::stod(val);
            else if (key == "lambda_sp") c.lambda_sp = std::stod(val);
            else if (key == "lambda_tm") c.lambda_tm = std::stod(val);
            else if (key == "lambda_g") c.lambda_g = std::stod(val);
            else if (key == "lambda_lie") c.lambda_lie = std::stod(val);
            else if (key == "charbonnier_eps") c.charbonnier_eps = std::stod(val);
            else if (key == "step_size") c.step_size = std::stod(val);
            else if (key == "max_iters") c.max_iters = std::stoi(val);
            else if (key == "grad_tol") c.grad_tol = std::stod(val);
            else if (key == "p") c.p = std::stoi(val);
            else if (key == "seed") c.seed = std::stoull(val);
            else throw IoError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return c;
}

void write_fit_config(const std::string& path, const FitConfig& c) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open fit config for writing: " + path);
    os << "lambda_id = " << c.lambda_id << "\n";
    os << "lambda_sp = " << c.lambda_sp << "\n";
    os << "lambda_tm = " << c.lambda_tm << "\n";
    os << "lambda_g = " << c.lambda_g << "\n";
    os << "lambda_lie = " << c.lambda_lie << "\n";
    os << "charbonnier_eps = " << c.charbonnier_eps << "\n";
    os << "step_size = " << c.step_size << "\n";
    os << "max_iters = " << c.max_iters << "\n";
    os << "grad_tol = " << c.grad_tol << "\n";
    os << "p = " << c.p << "\n";
    os << "seed = " << c.seed << "\n";
    if (!os) throw IoError("fit config write failed: " + path);
}

// ---------------------------------------------------------------- reports

void write_metric_report_kv(const std::string& path, const MetricReport& rep) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open report for writing: " + path);
    os.precision(10);
    os << "psnr = " << rep.psnr << "\n";
    os << "ssim = " << rep.ssim << "\n";
    os << "sigma_psnr = " << rep.sigma_psnr << "\n";
    if (rep.tof >= 0.0) os << "tof = " << rep.tof << "\n";
    for (std::size_t i = 0; i < rep.per_frame_psnr.size(); ++i) {
        os << "psnr_frame_" << i << " = " << rep.per_frame_psnr[i] << "\n";
    }
    if (!os) throw IoError("report write failed: " + path);
}

void write_metric_report_csv(const std::string& path, const MetricReport& rep) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open report for writing: " + path);
    os.precision(10);
    os << "frame,psnr,ssim,sigma_psnr,tof\n";
    for (std::size_t i = 0; i < rep.per_frame_psnr.size(); ++i) {
        os << i << "," << rep.per_frame_psnr[i] << ",,,\n";
    }
    os << "summary," << rep.psnr << "," << rep.ssim << "," << rep.sigma_psnr << ",";
    if (rep.tof >= 0.0) os << rep.tof;
    os << "\n";
    if (!os) throw IoError("report write failed: " + path);
}

void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open trace for writing: " + path);
    os.precision(12);
    os << "iter,data_term,reg_id,reg_sp,reg_tm,reg_g,total\n";
    for (const auto& e : trace) {
        os << e.iter << "," << e.data_term << "," << e.reg_terms[0] << "," << e.reg_terms[1]
           << "," << e.reg_terms[2] << "," << e.reg_terms[3] << "," << e.total << "\n";
    }
    if (!os) throw IoError("trace write failed: " + path);
}

}  // namespace libra
