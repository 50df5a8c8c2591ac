#pragma once

#include <cstddef>
#include <span>

#include "sdjscc/tape.hpp"

namespace sdjscc {

// x [B,Cin,H,W], w [Cout,Cin,kh,kw], b [Cout] -> [B,Cout,H',W'] (cross-correlation).
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var w, Var b, std::size_t stride, std::size_t padding);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var sigmoid(Tape<T>& tape, Var x);

// x [B,In], w [Out,In], b [Out] -> [B,Out].
template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b);

// Softmax over the last axis.
template <typename T>
Var softmax(Tape<T>& tape, Var x);

// [B,C,H,W] -> [B,C,2H,2W], each input pixel copied to a 2x2 block.
template <typename T>
Var nearest_upsample2x(Tape<T>& tape, Var x);

// [B,C,H,W] -> [B,C].
template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

// Mean of squared differences over all elements; scalar [1].
template <typename T>
Var mse(Tape<T>& tape, Var a, Var b);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b);

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

// Sum of all elements; scalar [1].
template <typename T>
Var sum(Tape<T>& tape, Var x);

// Mean softmax cross-entropy of logits [B,C] against class indices; scalar [1].
template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const std::size_t> labels);

}  // namespace sdjscc
