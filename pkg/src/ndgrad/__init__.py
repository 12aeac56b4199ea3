from .array import (Array2, Parameter, Tape, current_tape, get_dtype, grad, no_grad,
                    precision, set_precision)
from .gradcheck import GradCheckResult, check_gradients
from .ops import (Operand, absolute, add, as_array, clip01, concat_cols, concat_rows, constant,
                  elementwise, exp, matmul, mean, min_reduce_row, mul, patches, relu, reshape,
                  scale, slice_cols, slice_rows, softmax_rows, square, sub, total, transpose, zeros)
from .optim import Adam, stage_learning_rate
