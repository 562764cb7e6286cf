#pragma once

#include <iosfwd>

#include "sttn/model/layers.hpp"

namespace sttn::io {

// Long-format CSV: block,kind,layer,head,slice,row,col,value. `slice`
// flattens every leading axis of a score stack (the time step for spatial
// records, the node for temporal ones); rows and columns are row-major.
void write_attention_csv(std::ostream& out, const model::AttentionTrace& trace);

}  // namespace sttn::io
