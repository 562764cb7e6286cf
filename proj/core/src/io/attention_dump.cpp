#include "sttn/io/attention_dump.hpp"

#include <ostream>

#include "sttn/data/csv.hpp"

namespace sttn::io {

void write_attention_csv(std::ostream& out, const model::AttentionTrace& trace) {
  out << "block,kind,layer,head,slice,row,col,value\n";
  for (const auto& record : trace) {
    const auto& scores = record.scores;
    const std::size_t rows = scores.dim(-2);
    const std::size_t cols = scores.dim(-1);
    const std::size_t slices = scores.numel() / (rows * cols);
    const auto values = scores.data();
    for (std::size_t s = 0; s < slices; ++s)
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          out << record.block << ',' << model::to_string(record.kind) << ',' << record.layer << ','
              << record.head << ',' << s << ',' << r << ',' << c << ','
              << data::format_double(values[(s * rows + r) * cols + c]) << '\n';
        }
  }
}

}  // namespace sttn::io
