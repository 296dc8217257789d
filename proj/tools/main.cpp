#include "preauction/cli.hpp"

int main(int argc, char **argv)
{
  return preauction::run_cli(argc, argv);
}
