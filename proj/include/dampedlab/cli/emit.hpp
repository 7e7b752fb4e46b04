#pragma once

#include "dampedlab/spectra/spectrum.hpp"
#include "dampedlab/thermo/rate_function.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dampedlab::cli {

enum class Format { csv, json };

/// Shortest round-trip decimal. Infinities print as "inf" / "-inf", NaN as "nan".
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Comma-separated text with a header line. Every row must match the header width.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { line(header); }

  template <class... T>
  void row(const T&... v) {
    std::vector<std::string> cells{cell(v)...};
    if (cells.size() != width_) throw Error("CsvWriter: row width does not match the header");
    line(cells);
  }
  const std::string& str() const { return out_; }

private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }
  std::size_t width_;
  std::string out_;
};

inline std::string spectrum_csv(const std::vector<const spectra::SpectrumRecord*>& records) {
  CsvWriter w({"re", "im", "modulus", "decay_rate"});
  for (auto* r : records)
    for (std::size_t i = 0; i < r->eigenvalues.size(); ++i)
      w.row(r->eigenvalues[i].real(), r->eigenvalues[i].imag(), std::abs(r->eigenvalues[i]), r->decay_rates[i]);
  return w.str();
}

inline std::string rate_function_csv(const std::vector<const thermo::RateFunctionTable*>& tables) {
  CsvWriter w({"s", "H"});
  for (auto* t : tables)
    for (std::size_t i = 0; i < t->s_grid.size(); ++i)
      w.row(t->s_grid[i], thermo::RateFunctionTable::is_sentinel(t->H[i]) ? -INFINITY : t->H[i]);
  return w.str();
}

/// JSON number, with the non-finite values spelled as strings.
inline nlohmann::ordered_json jnum(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

inline std::string spectrum_json(const std::vector<const spectra::SpectrumRecord*>& records) {
  auto a = nlohmann::ordered_json::array();
  for (auto* r : records) {
    nlohmann::ordered_json j;
    j["source"] = r->source;
    j["dimension"] = r->dimension;
    j["residual"] = jnum(r->residual);
    j["trace_defect"] = jnum(r->trace_defect);
    auto ev = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r->eigenvalues.size(); ++i)
      ev.push_back({jnum(r->eigenvalues[i].real()), jnum(r->eigenvalues[i].imag()), jnum(r->decay_rates[i])});
    j["eigenvalues"] = ev;
    a.push_back(j);
  }
  return a.dump(1) + "\n";
}

inline std::string rate_function_json(const std::vector<const thermo::RateFunctionTable*>& tables) {
  auto a = nlohmann::ordered_json::array();
  for (auto* t : tables) {
    nlohmann::ordered_json j;
    j["q_minus"] = t->q_minus;
    j["q_bar"] = t->q_bar;
    j["q_plus"] = t->q_plus;
    auto s = nlohmann::ordered_json::array(), h = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t->s_grid.size(); ++i) {
      s.push_back(jnum(t->s_grid[i]));
      h.push_back(thermo::RateFunctionTable::is_sentinel(t->H[i]) ? nlohmann::ordered_json("-inf") : jnum(t->H[i]));
    }
    j["s"] = s;
    j["H"] = h;
    a.push_back(j);
  }
  return a.dump(1) + "\n";
}

inline std::string emit(const std::vector<const spectra::SpectrumRecord*>& r, Format f) {
  return f == Format::csv ? spectrum_csv(r) : spectrum_json(r);
}
inline std::string emit(const std::vector<const thermo::RateFunctionTable*>& r, Format f) {
  return f == Format::csv ? rate_function_csv(r) : rate_function_json(r);
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  f.write(s.data(), std::streamsize(s.size()));
  if (!f) throw Error("write failed: " + p.string());
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// gzip stream with a zero timestamp, so equal input gives equal bytes.
inline void write_gzip(const std::filesystem::path& p, const std::string& s) {
  gzFile f = gzopen(p.string().c_str(), "wb9");
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  int n = s.empty() ? 0 : gzwrite(f, s.data(), unsigned(s.size()));
  int rc = gzclose(f);
  if ((!s.empty() && n != int(s.size())) || rc != Z_OK) throw Error("gzip write failed: " + p.string());
}

inline std::string read_gzip(const std::filesystem::path& p) {
  gzFile f = gzopen(p.string().c_str(), "rb");
  if (!f) throw Error("cannot open " + p.string());
  std::string out;
  char buf[1 << 15];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, std::size_t(n));
  gzclose(f);
  if (n < 0) throw Error("gzip read failed: " + p.string());
  return out;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_text(p)); }

} // namespace dampedlab::cli
