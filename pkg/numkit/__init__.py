from numkit.dense_ops import DenseMatrix, DenseVector, dense_solve, dot, ewise
