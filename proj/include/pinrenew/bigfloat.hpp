#pragma once

#include <boost/multiprecision/mpfr.hpp>

namespace pinrenew {

// Arbitrary-precision real with runtime-selected precision. Expression
// templates are off so values behave like ordinary numbers in containers.
using bigfloat =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                  boost::multiprecision::et_off>;

// Scoped switch of the default construction precision, specified in bits.
class precision_guard {
  public:
    explicit precision_guard(unsigned bits) : saved_(bigfloat::default_precision()) {
        bigfloat::default_precision(digits10_for_bits(bits));
    }
    ~precision_guard() { bigfloat::default_precision(saved_); }
    precision_guard(const precision_guard&) = delete;
    precision_guard& operator=(const precision_guard&) = delete;

    static unsigned digits10_for_bits(unsigned bits) {
        return static_cast<unsigned>(static_cast<double>(bits) * 0.3010299956639812) + 3;
    }

  private:
    unsigned saved_;
};

} // namespace pinrenew
