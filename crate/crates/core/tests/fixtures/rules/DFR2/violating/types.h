#ifndef TYPES_H
#define TYPES_H
typedef int tS32;
typedef unsigned char tU8;
#define NULL ((void *)0)
#endif
