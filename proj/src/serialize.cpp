#include "ucps/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ucps {
namespace {

void put_double(std::ostream& os, double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", x);
  os << buf;
}

double get_double(std::istream& is) {
  std::string tok;
  if (!(is >> tok)) throw Error("serialize: unexpected end of input");
  return std::strtod(tok.c_str(), nullptr);
}

void put_matrix(std::ostream& os, const Matrix& M) {
  os << M.rows() << ' ' << M.cols() << '\n';
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j) os << ' ';
      put_double(os, M(i, j).real());
      os << ' ';
      put_double(os, M(i, j).imag());
    }
    os << '\n';
  }
}

Matrix get_matrix(std::istream& is) {
  long rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0)
    throw Error("serialize: bad matrix header");
  Matrix M(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      const double re = get_double(is);
      const double im = get_double(is);
      M(i, j) = Complex(re, im);
    }
  return M;
}

void write_atomic(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("serialize: cannot open " + tmp + " for writing");
    os << body;
    if (!os) throw Error("serialize: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("serialize: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

std::string state_to_text(const UcpsState& state) {
  std::ostringstream os;
  os << "ucps " << state.n << ' ' << state.s << ' ' << state.dim << '\n';
  for (int i = 0; i < state.dim; ++i) {
    for (int j = 0; j < state.dim; ++j) {
      if (j) os << ' ';
      put_double(os, state.C(i, j).real());
      os << ' ';
      put_double(os, state.C(i, j).imag());
    }
    os << '\n';
  }
  return os.str();
}

UcpsState state_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int n = 0, s = 0, dim = 0;
  if (!(is >> magic >> n >> s >> dim) || magic != "ucps")
    throw Error("serialize: not a state record");
  if (s != 2) throw Error("serialize: only spin-1/2 records are supported");
  Matrix C(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double re = get_double(is);
      const double im = get_double(is);
      C(i, j) = Complex(re, im);
    }
  return UcpsState(n, std::move(C));
}

void save_state(const std::string& path, const UcpsState& state) {
  write_atomic(path, state_to_text(state));
}

UcpsState load_state(const std::string& path) {
  return state_from_text(read_all(path));
}

void save_checkpoint(const std::string& path, const TdvpCheckpoint& ck) {
  std::ostringstream os;
  os << "ucps-checkpoint 1\n";
  os << state_to_text(ck.state);
  os << "step " << ck.step << '\n';
  os << "dt ";
  put_double(os, ck.dt);
  os << "\ntime ";
  put_double(os, ck.time);
  os << "\nsuccess " << ck.success_run << '\n';
  os << "warmb ";
  put_matrix(os, ck.warm_B);
  os << "rng " << ck.rng.size() << ' ' << ck.rng << '\n';
  write_atomic(path, os.str());
}

TdvpCheckpoint load_checkpoint(const std::string& path) {
  std::istringstream is(read_all(path));
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "ucps-checkpoint" || version != 1)
    throw Error("serialize: not a checkpoint record: " + path);

  TdvpCheckpoint ck;
  std::string tag;
  int n = 0, s = 0, dim = 0;
  if (!(is >> tag >> n >> s >> dim) || tag != "ucps")
    throw Error("serialize: checkpoint missing state block");
  if (s != 2) throw Error("serialize: only spin-1/2 records are supported");
  Matrix C(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double re = get_double(is);
      const double im = get_double(is);
      C(i, j) = Complex(re, im);
    }
  ck.state = UcpsState(n, std::move(C));

  if (!(is >> tag >> ck.step) || tag != "step")
    throw Error("serialize: checkpoint missing step");
  if (!(is >> tag) || tag != "dt") throw Error("serialize: missing dt");
  ck.dt = get_double(is);
  if (!(is >> tag) || tag != "time") throw Error("serialize: missing time");
  ck.time = get_double(is);
  if (!(is >> tag >> ck.success_run) || tag != "success")
    throw Error("serialize: checkpoint missing success counter");
  if (!(is >> tag) || tag != "warmb") throw Error("serialize: missing warmb");
  ck.warm_B = get_matrix(is);
  size_t rng_len = 0;
  if (!(is >> tag >> rng_len) || tag != "rng")
    throw Error("serialize: checkpoint missing rng");
  if (rng_len) {
    is.get();  // single separator space
    std::string buf(rng_len, '\0');
    is.read(buf.data(), static_cast<std::streamsize>(rng_len));
    if (static_cast<size_t>(is.gcount()) != rng_len)
      throw Error("serialize: truncated rng state");
    ck.rng = std::move(buf);
  }
  return ck;
}

}  // namespace ucps
