#include "dsel/dataset.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsel/numfmt.hpp"

namespace dsel {
namespace {

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

} // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "id,ifd,loss0";
    for (std::size_t j = 1; j <= ds.embedding_dim; ++j)
        out << ",e_" << j;
    out << '\n';
    for (const auto& s : ds.samples) {
        if (s.embedding.size() != ds.embedding_dim)
            throw std::invalid_argument("write_dataset: embedding dimension mismatch for id " +
                                        std::to_string(s.id));
        out << s.id << ',' << format_double(s.ifd) << ',' << format_double(s.current_loss);
        for (double e : s.embedding)
            out << ',' << format_double(e);
        out << '\n';
    }
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        fail(path, 1, "missing header");
    auto header = split_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "ifd" || header[2] != "loss0")
        fail(path, 1, "header must start with id,ifd,loss0");
    const std::size_t dim = header.size() - 3;
    for (std::size_t j = 0; j < dim; ++j) {
        if (header[3 + j] != "e_" + std::to_string(j + 1))
            fail(path, 1, "bad embedding column name '" + std::string(header[3 + j]) + "'");
    }

    Dataset ds;
    ds.embedding_dim = dim;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto cols = split_line(line);
        if (cols.size() != 3 + dim)
            fail(path, line_no, "expected " + std::to_string(3 + dim) + " columns, got " +
                                    std::to_string(cols.size()));
        SampleRecord s;
        try {
            s.id = parse_int(cols[0]);
            s.ifd = parse_double(cols[1]);
            s.current_loss = parse_double(cols[2]);
            s.embedding.reserve(dim);
            for (std::size_t j = 0; j < dim; ++j)
                s.embedding.push_back(parse_double(cols[3 + j]));
        } catch (const std::exception& e) {
            fail(path, line_no, e.what());
        }
        if (s.ifd < 0.0)
            fail(path, line_no, "negative ifd");
        s.utility = s.current_loss;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

} // namespace dsel
