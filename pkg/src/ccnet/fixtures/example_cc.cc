# three vertices, the edge {s0,s1} and the face {s0,s1,s2}
n 3
1 0 1
2 0 1 2
